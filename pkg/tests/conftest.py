import pytest

from dynbcast.core import canonical_bag


def reference_round(states, informed, edges, spec):
    """Plain-dict rendition of one synchronous round, used as an oracle for the engine."""
    n = len(states)
    nbrs = {v: [] for v in range(n)}
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    out = [spec.emit(s) for s in states]
    bags = [canonical_bag(out[u] for u in nbrs[v] if out[u] is not None) for v in range(n)]
    nxt = [spec.step(s, bag) for s, bag in zip(states, bags)]
    heard = [informed[v] or any(out[u] is not None and informed[u] for u in nbrs[v]) for v in range(n)]
    return tuple(nxt), tuple(heard)


@pytest.fixture(scope="session")
def reference():
    return reference_round
