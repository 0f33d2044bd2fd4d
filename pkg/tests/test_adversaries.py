import itertools
import json
from collections import Counter

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from dynbcast.adversaries import (
    Snapshot,
    adversary_from_name,
    complete_adversary,
    complete_edges,
    enumerate_connected_snapshots,
    is_connected,
    path_edges,
    path_sequester_adversary,
    prufer_to_edges,
    random_connected_adversary,
    spooling_adversary,
    static_adversary,
)
from dynbcast.engine import Configuration


def view(n, informed=None):
    informed = informed if informed is not None else [v == 0 for v in range(n)]
    return Configuration(0, (None,) * n, tuple(informed))


def as_nx(snap):
    g = nx.empty_graph(snap.n)
    g.add_edges_from(snap.edge_set())
    return g


class TestSnapshot:
    def test_normalizes_orientation(self):
        assert Snapshot(3, [(1, 0), (2, 1)]).edge_list() == [[0, 1], [1, 2]]

    @pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 3)]])
    def test_rejects_bad_edges(self, edges):
        with pytest.raises(ValueError):
            Snapshot(3, edges)

    def test_equality_ignores_storage_order(self):
        a = Snapshot.from_arrays(3, [1, 0], [2, 1])
        assert a == Snapshot(3, [(0, 1), (1, 2)])
        assert hash(a) == hash(Snapshot(3, [(0, 1), (1, 2)]))


class TestConnectivity:
    def test_examples(self):
        assert is_connected(Snapshot(4, complete_edges(4)))
        assert not is_connected(Snapshot(4, [(0, 1), (2, 3)]))
        assert is_connected(Snapshot(3, [(0, 1), (1, 2)]))
        assert is_connected(Snapshot(1))
        assert not is_connected(Snapshot(2))

    @settings(max_examples=150)
    @given(st.integers(1, 9).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.sampled_from(complete_edges(n)) if n > 1 else st.nothing()))))
    def test_matches_networkx(self, case):
        n, edges = case
        snap = Snapshot(n, sorted(edges))
        assert is_connected(snap) == nx.is_connected(as_nx(snap))


class TestStaticAndComplete:
    def test_static_repeats(self):
        adv = static_adversary(complete_edges(3))
        assert {adv.next(t, view(3)) for t in range(5)} == {Snapshot(3, complete_edges(3))}
        adv = static_adversary(path_edges(5))
        assert all(adv.next(t, view(5)).edge_set() == set(path_edges(5)) for t in range(5))

    def test_static_rejects_disconnected(self):
        with pytest.raises(ValueError):
            static_adversary([(0, 1), (2, 3)])

    def test_static_from_file(self, tmp_path):
        f = tmp_path / "g.json"
        f.write_text(json.dumps({"n": 4, "edges": [[0, 1], [1, 2], [2, 3]]}))
        adv = adversary_from_name(f"static:{f}")
        assert adv.next(0, view(4)).edge_set() == {(0, 1), (1, 2), (2, 3)}

    @pytest.mark.parametrize("n", [1, 2, 3, 6])
    def test_complete(self, n):
        snap = complete_adversary().next(7, view(n))
        assert snap.edge_set() == set(complete_edges(n))
        assert len(snap) == n * (n - 1) // 2


class TestPrufer:
    @settings(max_examples=100)
    @given(st.integers(3, 12).flatmap(lambda n: st.lists(st.integers(0, n - 1), min_size=n - 2, max_size=n - 2)))
    def test_matches_networkx(self, seq):
        n = len(seq) + 2
        ours = {tuple(sorted(e)) for e in prufer_to_edges(seq, n)}
        theirs = {tuple(sorted(e)) for e in nx.from_prufer_sequence(seq).edges()}
        assert ours == theirs

    def test_bijection_on_four_nodes(self):
        trees = {frozenset(prufer_to_edges(seq, 4)) for seq in itertools.product(range(4), repeat=2)}
        assert len(trees) == 16


class TestRandom:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**64 - 1), st.integers(1, 40), st.floats(0, 1), st.integers(0, 10**6))
    def test_always_connected_and_reproducible(self, seed, n, p, t):
        adv = random_connected_adversary(seed, p)
        a, b = adv.next(t, view(n)), random_connected_adversary(seed, p).next(t, view(n))
        assert is_connected(a) and nx.is_connected(as_nx(a))
        assert a == b
        assert a.n == n

    def test_full_probability_gives_complete_graph(self):
        adv = random_connected_adversary(5, 1.0)
        assert all(adv.next(t, view(7)).edge_set() == set(complete_edges(7)) for t in range(4))

    def test_zero_probability_gives_tree(self):
        adv = random_connected_adversary(5, 0.0)
        for t in range(20):
            assert nx.is_tree(as_nx(adv.next(t, view(9))))

    def test_rounds_differ(self):
        adv = random_connected_adversary(11, 0.2)
        assert len({adv.next(t, view(12)) for t in range(10)}) > 1

    def test_spanning_tree_is_uniform(self):
        adv = random_connected_adversary(2024, 0.0)
        counts = Counter(adv.next(t, view(4)).edge_set() for t in range(8000))
        assert len(counts) == 16
        assert chisquare(list(counts.values())).pvalue > 1e-3

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            random_connected_adversary(1, 1.5)


class TestSpooling:
    def test_initial_round(self):
        snap = spooling_adversary().next(0, view(5))
        assert snap.edge_set() == {(0, 1), (1, 2), (2, 3), (3, 4)}

    def test_mixed(self):
        snap = spooling_adversary().next(3, view(6, [True, True, False, True, False, False]))
        assert snap.edge_set() == {(0, 1), (0, 3), (1, 3), (0, 2), (2, 4), (4, 5)}
        assert is_connected(snap)

    def test_all_informed_is_complete(self):
        snap = spooling_adversary().next(9, view(4, [True] * 4))
        assert snap.edge_set() == set(complete_edges(4))


class TestSequester:
    def test_bridge_moves(self):
        adv = path_sequester_adversary(complete_edges(3), 3, 4)
        core = set(complete_edges(3))
        path = {(3, 4), (4, 5), (5, 6)}
        assert adv.next(0, view(7)).edge_set() == core | path | {(0, 3)}
        assert adv.next(1, view(7)).edge_set() == core | path | {(0, 4)}
        assert adv.next(3, view(7)).edge_set() == core | path | {(0, 6)}
        assert adv.next(50, view(7)).edge_set() == core | path | {(0, 6)}

    @pytest.mark.parametrize("core", [complete_edges(4), path_edges(4)])
    def test_consecutive_rounds_differ_only_in_bridge(self, core):
        adv = path_sequester_adversary(core, 4, 6)
        for t in range(5):
            a, b = adv.next(t, view(10)).edge_set(), adv.next(t + 1, view(10)).edge_set()
            assert a ^ b == {(0, 4 + t), (0, 5 + t)}
            assert is_connected(adv.next(t, view(10)))

    def test_rejects_disconnected_core(self):
        with pytest.raises(ValueError):
            path_sequester_adversary([(0, 1)], 3, 2)

    def test_registry_core_shapes(self):
        assert adversary_from_name("sequester:3:2").next(0, view(5)).edge_set() >= {(0, 1), (0, 2), (1, 2)}
        snap = adversary_from_name("sequester:3:2:path").next(0, view(5))
        assert snap.edge_set() == {(0, 1), (1, 2), (3, 4), (0, 3)}


class TestEnumeration:
    # frozen from brute force over all edge subsets checked with networkx.is_connected
    @pytest.mark.parametrize("n, count", [(1, 1), (2, 1), (3, 4), (4, 38), (5, 728)])
    def test_counts(self, n, count):
        snaps = enumerate_connected_snapshots(n)
        assert len(snaps) == count
        assert len(set(snaps)) == count
        assert all(nx.is_connected(as_nx(s)) for s in snaps)

    def test_rejects_large(self):
        with pytest.raises(ValueError):
            enumerate_connected_snapshots(6)

    def test_canonical_order_is_stable(self):
        assert [s.edge_list() for s in enumerate_connected_snapshots(3)] == [
            [[0, 1], [0, 2]],
            [[0, 1], [1, 2]],
            [[0, 2], [1, 2]],
            [[0, 1], [0, 2], [1, 2]],
        ]


@pytest.mark.parametrize("name", ["bogus", "random:1", "random:x:0.1", "sequester:3", "sequester:3:0", "static:/no/such/file", "complete:1"])
def test_registry_rejects(name):
    with pytest.raises(ValueError):
        adversary_from_name(name)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32), st.data())
def test_every_adversary_connected(n, seed, data):
    informed = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
    informed[0] = True
    names = ["complete", "path", "spooling", f"random:{seed}:0.05", f"random:{seed}:0"]
    for name in names:
        adv = adversary_from_name(name)
        for t in range(3):
            snap = adv.next(t, view(n, informed))
            assert snap.n == n
            assert nx.is_connected(as_nx(snap))
    assert np.all(Snapshot.complete(n).degrees() == n - 1)
