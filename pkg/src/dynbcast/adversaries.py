"""Per-round topology generators for 1-interval-connected dynamic networks.

Every adversary returns a connected :class:`Snapshot` on exactly ``n``
nodes. Adversaries may read the current configuration (``view``), which
only needs ``informed`` and ``n`` attributes here.
"""

from __future__ import annotations

import abc
import heapq
import itertools
import json
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order

from .core import ModelViolation

MAX_ENUMERATION_N = 5


class Snapshot:
    """Undirected simple graph on nodes ``0..n-1`` for one round.

    Edge ``i`` is ``(u[i], v[i])`` with ``u[i] < v[i]``; both columns are
    contiguous ``intp`` arrays. Generators may hand over edges in any order;
    equality, hashing and :meth:`edge_list` use the lexicographically
    sorted form.
    """

    __slots__ = ("n", "u", "v", "_connected", "_sorted")

    def __init__(self, n: int, edges=()):
        if n < 1:
            raise ValueError("a snapshot needs at least one node")
        arr = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size:
            if (arr < 0).any() or (arr >= n).any():
                raise ValueError("edge endpoint out of range")
            if (arr[:, 0] == arr[:, 1]).any():
                raise ValueError("self-loop in snapshot")
            arr = np.sort(arr, axis=1)
            keys = arr[:, 0] * n + arr[:, 1]
            uniq = np.unique(keys)
            if len(uniq) != len(keys):
                raise ValueError("duplicate edge in snapshot")
            arr = np.stack([uniq // n, uniq % n], axis=1)
        self._init(n, arr[:, 0], arr[:, 1], presorted=True)

    def _init(self, n, u, v, presorted=False, connected=None):
        self.n = int(n)
        self.u = np.ascontiguousarray(u, dtype=np.intp)
        self.v = np.ascontiguousarray(v, dtype=np.intp)
        self._connected: Optional[bool] = connected
        self._sorted = self if presorted else None

    @classmethod
    def from_arrays(cls, n: int, u, v, *, presorted: bool = False, connected: Optional[bool] = None) -> "Snapshot":
        """Wrap endpoint arrays a generator already knows to be simple with ``u < v``."""
        snap = cls.__new__(cls)
        snap._init(n, u, v, presorted, connected)
        return snap

    @classmethod
    def complete(cls, n: int) -> "Snapshot":
        u, v = _triu(n)
        return cls.from_arrays(n, u, v, presorted=True, connected=True)

    @classmethod
    def path(cls, n: int) -> "Snapshot":
        idx = np.arange(n - 1)
        return cls.from_arrays(n, idx, idx + 1, presorted=True, connected=True)

    @property
    def edges(self) -> np.ndarray:
        """``(m, 2)`` int64 array of edges, in storage order."""
        return np.stack([self.u, self.v], axis=1).astype(np.int64)

    def _canonical(self) -> "Snapshot":
        if self._sorted is None:
            order = np.lexsort((self.v, self.u))
            self._sorted = Snapshot.from_arrays(self.n, self.u[order], self.v[order], presorted=True)
        return self._sorted

    def edge_set(self) -> frozenset:
        return frozenset(zip(self.u.tolist(), self.v.tolist()))

    def edge_list(self) -> list[list[int]]:
        c = self._canonical()
        return [[a, b] for a, b in zip(c.u.tolist(), c.v.tolist())]

    def degrees(self) -> np.ndarray:
        return np.bincount(self.u, minlength=self.n) + np.bincount(self.v, minlength=self.n)

    def __len__(self) -> int:
        return len(self.u)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Snapshot):
            return NotImplemented
        a, b = self._canonical(), other._canonical()
        return self.n == other.n and np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v)

    def __hash__(self) -> int:
        c = self._canonical()
        return hash((self.n, c.u.tobytes(), c.v.tobytes()))

    def __repr__(self) -> str:
        return f"Snapshot(n={self.n}, edges={self.edge_list()})"


@lru_cache(maxsize=16)
def _triu(n: int) -> tuple[np.ndarray, np.ndarray]:
    u, v = np.triu_indices(n, k=1)
    u = u.astype(np.intp)
    v = v.astype(np.intp)
    u.flags.writeable = False
    v.flags.writeable = False
    return u, v


def is_connected(s: Snapshot) -> bool:
    """Whether a traversal from node 0 reaches all ``s.n`` nodes."""
    if s._connected is None:
        if s.n == 1:
            s._connected = True
        elif len(s) < s.n - 1:
            s._connected = False
        else:
            adj = coo_matrix((np.ones(len(s), dtype=np.int8), (s.u, s.v)), shape=(s.n, s.n)).tocsr()
            order = breadth_first_order(adj, 0, directed=False, return_predecessors=False)
            s._connected = len(order) == s.n
    return s._connected


def _require_connected(s: Snapshot, what: str) -> Snapshot:
    if not is_connected(s):
        raise ValueError(f"{what} is not connected")
    return s


class Adversary(abc.ABC):
    name: str = "adversary"

    @abc.abstractmethod
    def next(self, t: int, view) -> Snapshot:
        """Snapshot for round ``t`` given the configuration at the start of it."""


class StaticAdversary(Adversary):
    def __init__(self, snapshot: Snapshot, name: str = "static"):
        self.snapshot = _require_connected(snapshot, "static graph")
        self.name = name

    def next(self, t: int, view) -> Snapshot:
        return self.snapshot


def static_adversary(edges: Iterable, n: Optional[int] = None, name: str = "static") -> StaticAdversary:
    edges = [tuple(e) for e in edges]
    if n is None:
        n = 1 + max((max(e) for e in edges), default=0)
    return StaticAdversary(Snapshot(n, edges), name=name)


def load_static_adversary(path: str | Path) -> StaticAdversary:
    """Read ``{"n": int, "edges": [[u, v], ...]}`` (or a bare edge list) from JSON."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        return static_adversary(data["edges"], n=data.get("n"), name=f"static:{path}")
    return static_adversary(data, name=f"static:{path}")


class CompleteAdversary(Adversary):
    name = "complete"

    def next(self, t: int, view) -> Snapshot:
        return _complete(view.n)


@lru_cache(maxsize=8)
def _complete(n: int) -> Snapshot:
    return Snapshot.complete(n)


def complete_adversary() -> CompleteAdversary:
    return CompleteAdversary()


class PathAdversary(Adversary):
    """The static path ``0 - 1 - ... - n-1`` with the broadcaster at one end."""

    name = "path"

    def next(self, t: int, view) -> Snapshot:
        return _path(view.n)


@lru_cache(maxsize=8)
def _path(n: int) -> Snapshot:
    return Snapshot.path(n)


def prufer_to_edges(seq: Iterable[int], n: int) -> list[tuple[int, int]]:
    """Decode a Prüfer sequence of length ``n - 2`` into the edges of its labeled tree."""
    seq = list(seq)
    if n < 2:
        return []
    if len(seq) != n - 2:
        raise ValueError("Prüfer sequence must have length n - 2")
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def round_generator(seed: int, t: int, n: int) -> np.random.Generator:
    """Philox stream keyed by ``seed`` with the counter's high words set to ``(n, t)``.

    Draws advance the low counter word, so per-round streams never overlap.
    """
    bitgen = np.random.Philox(key=int(seed) & (2**64 - 1), counter=[0, 0, int(n), int(t)])
    return np.random.Generator(bitgen)


class RandomConnectedAdversary(Adversary):
    """Uniform random labeled spanning tree plus independent extra edges.

    Per round the generator first draws ``n - 2`` Prüfer entries with
    ``integers(0, n)``, then (only when ``0 < p < 1``) one ``random()`` per
    node pair in row-major ``u < v`` order; a non-tree pair is kept when its
    draw is below ``p``.
    """

    def __init__(self, seed: int, extra_edge_prob: float):
        if not 0.0 <= extra_edge_prob <= 1.0:
            raise ValueError("extra_edge_prob must lie in [0, 1]")
        self.seed = int(seed)
        self.p = float(extra_edge_prob)
        self.name = f"random:{self.seed}:{extra_edge_prob:g}"

    def snapshot(self, t: int, n: int) -> Snapshot:
        if n == 1:
            return Snapshot(1)
        if self.p == 1.0:
            return _complete(n)
        rng = round_generator(self.seed, t, n)
        if n == 2:
            tree = [(0, 1)]
        else:
            tree = prufer_to_edges(rng.integers(0, n, size=n - 2).tolist(), n)
        a, b = np.asarray(tree, dtype=np.int64).T
        if self.p == 0.0:
            return Snapshot.from_arrays(n, a, b, connected=True)
        u, v = _triu(n)
        keep = rng.random(len(u)) < self.p
        keep[a * n - a * (a + 1) // 2 + (b - a - 1)] = True  # row-major index of pair (a, b)
        return Snapshot.from_arrays(n, u[keep], v[keep], presorted=True, connected=True)

    def next(self, t: int, view) -> Snapshot:
        return self.snapshot(t, view.n)


def random_connected_adversary(seed: int, extra_edge_prob: float) -> RandomConnectedAdversary:
    return RandomConnectedAdversary(seed, extra_edge_prob)


class SpoolingAdversary(Adversary):
    """Informed nodes form a clique, uninformed nodes a path hanging off the broadcaster.

    The uninformed path runs in increasing index order and its lowest-index
    end is the only node touching the informed side, so at most one node
    can become informed per round.
    """

    name = "spooling"

    def next(self, t: int, view) -> Snapshot:
        n = view.n
        informed = np.asarray(view.informed, dtype=bool)
        if informed.all():
            return _complete(n)
        u, v = _triu(n)
        inside = informed[u] & informed[v]
        waiting = np.flatnonzero(~informed)
        su = np.concatenate([u[inside], [0], waiting[:-1]])
        sv = np.concatenate([v[inside], waiting[:1], waiting[1:]])
        return Snapshot.from_arrays(n, su, sv, connected=True)


def spooling_adversary() -> SpoolingAdversary:
    return SpoolingAdversary()


class PathSequesterAdversary(Adversary):
    """A static core plus a static path joined to the broadcaster by one moving edge.

    Core nodes are ``0..m-1`` with the broadcaster at ``broadcaster``; the
    path is ``v_0 = m, ..., v_{L-1} = m + L - 1``. In round ``t`` the only
    edge between them is ``{broadcaster, v_min(t, L-1)}``.
    """

    def __init__(self, core_edges: Iterable, m: int, path_len: int, broadcaster: int = 0, name: Optional[str] = None):
        if path_len < 1:
            raise ValueError("path length must be at least 1")
        if not 0 <= broadcaster < m:
            raise ValueError("broadcaster must be a core node")
        self.core = _require_connected(Snapshot(m, list(core_edges)), "sequestration core")
        self.m = m
        self.path_len = path_len
        self.broadcaster = broadcaster
        self.n = m + path_len
        self.name = name or f"sequester:{m}:{path_len}"
        idx = np.arange(m, m + path_len - 1)
        self._u = np.concatenate([self.core.u, idx])
        self._v = np.concatenate([self.core.v, idx + 1])

    def bridge(self, t: int) -> tuple[int, int]:
        return (self.broadcaster, self.m + min(t, self.path_len - 1))

    def next(self, t: int, view) -> Snapshot:
        if view.n != self.n:
            raise ModelViolation(f"sequester adversary built for n={self.n}, got n={view.n}")
        b, w = self.bridge(t)
        return Snapshot.from_arrays(self.n, np.append(self._u, b), np.append(self._v, w), connected=True)


def path_sequester_adversary(core: Iterable, m: int, path_len: int, broadcaster: int = 0) -> PathSequesterAdversary:
    return PathSequesterAdversary(core, m, path_len, broadcaster)


def complete_edges(m: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(m), 2))


def path_edges(m: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(m - 1)]


@lru_cache(maxsize=None)
def enumerate_connected_snapshots(n: int) -> tuple[Snapshot, ...]:
    """Every labeled connected graph on ``n <= 5`` nodes, ordered by edge bitmask."""
    if not 1 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"enumeration limited to 1 <= n <= {MAX_ENUMERATION_N}, got {n}")
    pairs = complete_edges(n)
    out = []
    for mask in range(1 << len(pairs)):
        chosen = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        snap = Snapshot(n, chosen)
        if is_connected(snap):
            out.append(snap)
    return tuple(out)


def adversary_from_name(name: str, n: Optional[int] = None) -> Adversary:
    """Resolve ``static:FILE``, ``complete``, ``path``, ``random:SEED:P``,
    ``spooling`` or ``sequester:M:L[:complete|path]``."""
    head, _, rest = name.partition(":")
    try:
        if head == "complete" and not rest:
            return CompleteAdversary()
        if head == "path" and not rest:
            return PathAdversary()
        if head == "spooling" and not rest:
            return SpoolingAdversary()
        if head == "static" and rest:
            return load_static_adversary(rest)
        if head == "random":
            seed, p = rest.split(":")
            return RandomConnectedAdversary(int(seed), float(p))
        if head == "sequester":
            parts = rest.split(":")
            m, length = int(parts[0]), int(parts[1])
            core_kind = parts[2] if len(parts) > 2 else "complete"
            if core_kind == "complete":
                core = complete_edges(m)
            elif core_kind == "path":
                core = path_edges(m)
            else:
                raise ValueError(f"unknown core {core_kind!r}")
            if len(parts) > 3:
                raise ValueError("too many sequester fields")
            return PathSequesterAdversary(core, m, length, name=name)
    except (ValueError, OSError, IndexError, KeyError) as exc:
        raise ValueError(f"bad adversary {name!r}: {exc}") from None
    raise ValueError(f"unknown adversary {name!r}")
