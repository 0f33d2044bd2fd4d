"""Exhaustive bounded exploration over every adversary choice for small ``n``.

Each round branches over all labeled connected graphs on ``n`` nodes.
Configurations are identified up to a permutation of the non-broadcaster
nodes: since the adversary may pick any labeled graph next, two such
configurations have the same futures.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .adversaries import Snapshot, enumerate_connected_snapshots
from .algorithms import check_countdown_round
from .core import AlgorithmSpec, InvariantViolation
from .engine import (
    Configuration,
    Trace,
    RoundRecord,
    _Memo,
    detect_stabilization,
    execute_round,
    initial_configuration,
    trace_lines,
)

log = logging.getLogger(__name__)

DEFAULT_CONFIG_CAP = 10**7
MAX_CHECK_N = 4
MAX_CHECK_N_FORCED = 5


class ConfigurationCapExceeded(RuntimeError):
    pass


def config_key(cfg: Configuration) -> tuple:
    """Broadcaster slot first, remaining ``(state, informed)`` slots sorted."""
    rest = sorted(zip(cfg.states[1:], cfg.informed[1:]))
    return ((cfg.states[0], cfg.informed[0]),) + tuple(rest)


def canonical(cfg: Configuration) -> Configuration:
    key = config_key(cfg)
    return Configuration(cfg.t, tuple(s for s, _ in key), tuple(i for _, i in key))


def canonical_order(cfg: Configuration) -> list[int]:
    """Node indices listed in canonical slot order (broadcaster first)."""
    rest = sorted(range(1, cfg.n), key=lambda v: (cfg.states[v], cfg.informed[v]))
    return [0] + rest


def replay(spec: AlgorithmSpec, n: int, snaps: list) -> list:
    """Turn a path of snapshots over canonical labels into a literal execution.

    Each snapshot is relabeled onto the uncanonicalized configuration it
    acts on, so the result is a real run: ``[(config_t, snapshot_t), ...]``
    ending with ``(final_config, None)``.
    """
    memo = _Memo(spec)
    cfg = initial_configuration(spec, n)
    out = []
    for snap in snaps:
        order = canonical_order(cfg)
        edges = [(order[a], order[b]) for a, b in snap.edge_list()]
        real = Snapshot(n, edges)
        out.append((cfg, real))
        cfg, _ = execute_round(cfg, real, spec, memo)
    out.append((cfg, None))
    return out


def _check_n(n: int, allow_n5: bool) -> None:
    limit = MAX_CHECK_N_FORCED if allow_n5 else MAX_CHECK_N
    if not 1 <= n <= limit:
        raise ValueError(f"exhaustive checking supports n <= {limit}, got {n}")


def successors(cfg: Configuration, spec: AlgorithmSpec, n: int, memo: Optional[_Memo] = None) -> dict:
    """Map ``config_key -> (canonical successor, snapshot)`` over every connected snapshot."""
    if n > MAX_CHECK_N_FORCED:
        raise ValueError(f"n = {n} exceeds the enumeration limit")
    memo = memo or _Memo(spec)
    out: dict = {}
    for snap in enumerate_connected_snapshots(n):
        nxt, _ = execute_round(cfg, snap, spec, memo)
        key = config_key(nxt)
        if key not in out:
            out[key] = (canonical(nxt), snap)
    return out


@dataclass
class Violation:
    depth: int
    message: str
    witness: list  # [(Configuration, Snapshot | None), ...] from the initial configuration

    def as_dict(self, spec: AlgorithmSpec) -> dict[str, Any]:
        return {"depth": self.depth, "message": self.message, "witness": witness_lines(self.witness, spec)}


@dataclass
class CheckReport:
    n: int
    depth_bound: int
    reachable_count: int = 0
    all_stable_at_bound: bool = False
    invariant_violations: list = field(default_factory=list)
    worst_stabilization_depth: Optional[int] = None
    frontier_sizes: list = field(default_factory=list)
    unstable_at_bound: int = 0

    def as_dict(self, spec: AlgorithmSpec) -> dict[str, Any]:
        return {
            "n": self.n,
            "depth_bound": self.depth_bound,
            "reachable_count": self.reachable_count,
            "all_stable_at_bound": self.all_stable_at_bound,
            "invariant_violations": [v.as_dict(spec) for v in self.invariant_violations],
            "worst_stabilization_depth": self.worst_stabilization_depth,
            "frontier_sizes": self.frontier_sizes,
            "unstable_at_bound": self.unstable_at_bound,
        }

    def to_json(self, spec: AlgorithmSpec) -> str:
        return json.dumps(self.as_dict(spec), sort_keys=True)


def witness_lines(witness: list, spec: AlgorithmSpec) -> list[dict]:
    """A witness path in the trace JSONL layout (header object first)."""
    cfgs = [c for c, _ in witness]
    trace = Trace(spec.name, "exhaustive", cfgs[0].n if cfgs else 0, 0, configs=cfgs)
    trace.records = [RoundRecord(c.t, s, 0, (), (), 0) for c, s in witness if s is not None]
    lines = list(trace_lines(trace, spec))
    # sender counts are recomputed here; the search itself does not keep them
    for line, cfg in zip(lines[1:], cfgs):
        line["messages_sent"] = sum(spec.emit(s) is not None for s in cfg.states) if line["edges"] else 0
    return lines


def explore(
    spec: AlgorithmSpec,
    n: int,
    depth_bound: int,
    invariant: Optional[Callable[[int, tuple, int], None]] = None,
    *,
    config_cap: int = DEFAULT_CONFIG_CAP,
    allow_n5: bool = False,
    max_witnesses: int = 10,
) -> CheckReport:
    """Level-by-level search from the initial configuration to ``depth_bound``.

    Level ``d`` holds every distinct (canonical) configuration reachable in
    exactly ``d`` rounds. ``invariant(t, states, n)`` is applied to each of
    them; violating configurations are recorded and not expanded.
    """
    _check_n(n, allow_n5)
    if depth_bound < 0:
        raise ValueError("depth_bound must be non-negative")
    memo = _Memo(spec)
    report = CheckReport(n, depth_bound)
    start = canonical(initial_configuration(spec, n))
    level = {config_key(start): start}
    parents: list[dict] = [{config_key(start): (None, None)}]
    seen = {config_key(start)}
    last_unstable = None

    def witness(depth: int, key) -> list:
        snaps = []
        for d in range(depth, 0, -1):
            key, snap = parents[d][key]
            snaps.append(snap)
        return replay(spec, n, snaps[::-1])

    for depth in range(depth_bound + 1):
        expand = {}
        unstable = 0
        for key, cfg in level.items():
            if invariant is not None:
                try:
                    invariant(depth, cfg.states, n)
                except InvariantViolation as exc:
                    if len(report.invariant_violations) < max_witnesses:
                        report.invariant_violations.append(Violation(depth, str(exc), witness(depth, key)))
                    else:
                        report.invariant_violations.append(Violation(depth, str(exc), []))
                    continue
            if not (detect_stabilization(cfg, spec, memo) and cfg.all_informed()):
                unstable += 1
            expand[key] = cfg
        report.frontier_sizes.append(len(level))
        if unstable:
            last_unstable = depth
        if depth == depth_bound:
            report.unstable_at_bound = unstable
            break
        nxt_level: dict = {}
        nxt_parents: dict = {}
        for key, cfg in expand.items():
            for skey, (scfg, snap) in successors(cfg, spec, n, memo).items():
                if skey not in nxt_level:
                    nxt_level[skey] = scfg
                    nxt_parents[skey] = (key, snap)
                    seen.add(skey)
                    if len(seen) > config_cap:
                        raise ConfigurationCapExceeded(f"more than {config_cap} configurations")
        log.debug("depth %d: %d configurations", depth + 1, len(nxt_level))
        level = nxt_level
        parents.append(nxt_parents)

    report.reachable_count = len(seen)
    report.all_stable_at_bound = not report.invariant_violations and report.unstable_at_bound == 0
    if report.all_stable_at_bound:
        report.worst_stabilization_depth = 0 if last_unstable is None else last_unstable + 1
    return report


def verify_universal_stabilization(spec: AlgorithmSpec, n: int, depth_bound: int, **kw) -> CheckReport:
    """Every adversary path reaches all-idle, all-informed within ``depth_bound`` rounds."""
    if n < 2:
        raise ValueError("universal stabilization check needs n >= 2")
    return explore(spec, n, depth_bound, None, **kw)


def verify_invariants(spec: AlgorithmSpec, n: int, depth_bound: int, **kw) -> CheckReport:
    """Same exploration, asserting Countdown's agreement and counter bounds everywhere."""
    if n < 2:
        raise ValueError("invariant check needs n >= 2")
    return explore(spec, n, depth_bound, check_countdown_round, **kw)
