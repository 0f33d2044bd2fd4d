"""Synchronous round executor, stabilization detection, traces and metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Any, Optional

import numpy as np

from .adversaries import Adversary, Snapshot, is_connected
from .core import EMPTY_BAG, AlgorithmSpec, MessageBag, ModelViolation, Role

BROADCASTER = 0


@dataclass(frozen=True)
class Configuration:
    t: int
    states: tuple
    informed: tuple

    @property
    def n(self) -> int:
        return len(self.states)

    def all_informed(self) -> bool:
        return all(self.informed)


@dataclass(frozen=True)
class RoundRecord:
    t: int
    edges: Optional[Snapshot]
    messages_sent: int
    senders: tuple
    newly_informed: tuple
    deliveries: int


@dataclass
class Metrics:
    n: int
    rounds_to_all_informed: Optional[int]
    rounds_to_stabilization: Optional[int]
    peak_counter_value: int
    peak_state_bits: int
    total_messages: int
    rounds_executed: int
    uninformed_at_end: int

    @property
    def stabilized(self) -> bool:
        return self.rounds_to_stabilization is not None

    @property
    def broadcast_failed(self) -> bool:
        """Quiescent with somebody still uninformed."""
        return self.stabilized and self.uninformed_at_end > 0

    def as_dict(self) -> dict[str, Any]:
        never = lambda x: "never" if x is None else x  # noqa: E731
        return {
            "n": self.n,
            "rounds_to_all_informed": never(self.rounds_to_all_informed),
            "rounds_to_stabilization": never(self.rounds_to_stabilization),
            "peak_counter_value": self.peak_counter_value,
            "peak_state_bits": self.peak_state_bits,
            "total_messages": self.total_messages,
            "rounds_executed": self.rounds_executed,
            "uninformed_at_end": self.uninformed_at_end,
            "broadcast_failed": self.broadcast_failed,
        }


@dataclass
class Trace:
    algorithm: str
    adversary: str
    n: int
    seed: int = 0
    configs: list = field(default_factory=list)
    records: list = field(default_factory=list)

    def header(self) -> dict[str, Any]:
        return {"algorithm": self.algorithm, "adversary": self.adversary, "n": self.n, "seed": self.seed}


class _Memo:
    """Per-spec caches; valid because every contract function is pure."""

    def __init__(self, spec: AlgorithmSpec):
        self.spec = spec
        self.emits: dict = {}
        self.steps: dict = {}
        self.idle: dict = {}

    def emit(self, state):
        try:
            return self.emits[state]
        except KeyError:
            msg = self.emits[state] = self.spec.emit(state)
            return msg

    def step(self, state, bag):
        key = (state, bag)
        try:
            return self.steps[key]
        except KeyError:
            nxt = self.steps[key] = self.spec.step(state, bag)
            return nxt

    def is_idle(self, state) -> bool:
        try:
            return self.idle[state]
        except KeyError:
            flag = self.idle[state] = self.emit(state) is None and self.step(state, EMPTY_BAG) == state
            return flag


def initial_configuration(spec: AlgorithmSpec, n: int) -> Configuration:
    if n < 1:
        raise ValueError("need at least one node")
    states = tuple(spec.init(Role.BROADCASTER if v == BROADCASTER else Role.ORDINARY) for v in range(n))
    informed = tuple(v == BROADCASTER for v in range(n))
    return Configuration(0, states, informed)


def _neighbor_sums(a: np.ndarray, b: np.ndarray, flags: np.ndarray, n: int) -> np.ndarray:
    """Per node, how many neighbors have ``flags`` set (as floats)."""
    w = flags.astype(np.float64)
    if len(a) == n * (n - 1) // 2:  # a simple graph this size is complete
        return w.sum() - w
    return np.bincount(b, weights=w[a], minlength=n) + np.bincount(a, weights=w[b], minlength=n)


def execute_round(
    config: Configuration, snapshot: Snapshot, spec: AlgorithmSpec, memo: Optional[_Memo] = None
) -> tuple[Configuration, RoundRecord]:
    """Run one synchronous round: emit from pre-round states, deliver, step everyone."""
    n = config.n
    if snapshot.n != n:
        raise ModelViolation(f"snapshot has {snapshot.n} nodes, configuration has {n}")
    if not is_connected(snapshot):
        raise ModelViolation(f"round {config.t}: snapshot is disconnected")
    memo = memo or _Memo(spec)

    msgs = [memo.emit(s) for s in config.states]
    senders = tuple(m is not None for m in msgs)
    n_senders = sum(senders)
    bags = [EMPTY_BAG] * n
    informed = list(config.informed)
    newly: tuple = ()
    deliveries = 0

    if n_senders and len(snapshot):
        a, b = snapshot.u, snapshot.v
        distinct = sorted({m for m in msgs if m is not None})
        inf = np.fromiter(config.informed, dtype=bool, count=n)
        sends = np.fromiter(senders, dtype=bool, count=n)
        if len(distinct) == 1:
            counts = _neighbor_sums(a, b, sends, n).astype(np.int64)[None, :]
            deliveries = int(counts.sum())
        else:
            ids = {m: j for j, m in enumerate(distinct)}
            msg_id = np.fromiter((-1 if m is None else ids[m] for m in msgs), dtype=np.int64, count=n)
            counts = np.zeros((len(distinct), n), dtype=np.int64)
            ia, ib = msg_id[a], msg_id[b]
            ab, ba = ia >= 0, ib >= 0
            np.add.at(counts, (ia[ab], b[ab]), 1)
            np.add.at(counts, (ib[ba], a[ba]), 1)
            deliveries = int(ab.sum() + ba.sum())
        receivers = np.flatnonzero(counts.any(axis=0))
        # receivers with identical count columns share one bag object
        columns, which = np.unique(counts[:, receivers].T, axis=0, return_inverse=True)
        shared = [MessageBag(zip(distinct, col.tolist())) for col in columns]
        for v, k in zip(receivers.tolist(), which.ravel().tolist()):
            bags[v] = shared[k]

        if (sends & ~inf).any():
            hit = _neighbor_sums(a, b, sends & inf, n) > 0
        else:
            hit = counts.any(axis=0)
        fresh = np.flatnonzero(hit & ~inf).tolist()
        for v in fresh:
            informed[v] = True
        newly = tuple(fresh)

    states = tuple(memo.step(s, b) for s, b in zip(config.states, bags))
    nxt = Configuration(config.t + 1, states, tuple(informed))
    rec = RoundRecord(config.t, snapshot, n_senders, senders, newly, deliveries)
    return nxt, rec


def detect_stabilization(config: Configuration, spec: AlgorithmSpec, memo: Optional[_Memo] = None) -> bool:
    """True iff every node is idle."""
    memo = memo or _Memo(spec)
    return all(memo.is_idle(s) for s in config.states)


def stabilization_bound(n: int) -> int:
    """Round budget within which Countdown stabilizes on ``n`` nodes."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return 1
    return 4 * n + (n - 1).bit_length() + 2


def default_horizon(n: int) -> int:
    return 10 * stabilization_bound(n)


def run(
    spec: AlgorithmSpec,
    adv: Adversary,
    n: int,
    max_rounds: Optional[int] = None,
    *,
    seed: int = 0,
    record_edges: bool = False,
    check: bool = True,
    extra_rounds: int = 0,
) -> tuple[Trace, Metrics]:
    """Execute until every node is idle or ``max_rounds`` rounds have run.

    ``check`` calls ``spec.check_round`` on every configuration. With
    ``extra_rounds`` the run keeps going that many rounds past
    stabilization (metrics still report the first stable round).
    """
    if max_rounds is None:
        max_rounds = default_horizon(n)
    if max_rounds < 0:
        raise ValueError("max_rounds must be non-negative")
    memo = _Memo(spec)
    config = initial_configuration(spec, n)
    trace = Trace(spec.name, getattr(adv, "name", type(adv).__name__), n, seed)
    trace.configs.append(config)
    if check:
        spec.check_round(0, config.states, n)

    stable_at = 0 if detect_stabilization(config, spec, memo) else None
    stop_at = max_rounds if stable_at is None else min(max_rounds, stable_at + extra_rounds)
    while config.t < stop_at:
        snap = adv.next(config.t, config)
        config, rec = execute_round(config, snap, spec, memo)
        if not record_edges:
            rec = RoundRecord(rec.t, None, rec.messages_sent, rec.senders, rec.newly_informed, rec.deliveries)
        trace.records.append(rec)
        trace.configs.append(config)
        if check:
            spec.check_round(config.t, config.states, n)
        if stable_at is None and detect_stabilization(config, spec, memo):
            stable_at = config.t
            stop_at = min(max_rounds, stable_at + extra_rounds)
    return trace, compute_metrics(trace, spec, memo)


def compute_metrics(trace: Trace, spec: AlgorithmSpec, memo: Optional[_Memo] = None) -> Metrics:
    if not trace.configs:
        raise ValueError("empty trace")
    memo = memo or _Memo(spec)
    all_informed = next((c.t for c in trace.configs if c.all_informed()), None)
    stable = next((c.t for c in trace.configs if detect_stabilization(c, spec, memo)), None)
    seen = set()
    for c in trace.configs:
        seen.update(c.states)
    counters = [spec.counter_value(s) for s in seen]
    counters = [c for c in counters if c is not None]
    last = trace.configs[-1]
    return Metrics(
        n=trace.n,
        rounds_to_all_informed=all_informed,
        rounds_to_stabilization=stable,
        peak_counter_value=max(counters, default=0),
        peak_state_bits=max(spec.bits(s) for s in seen),
        total_messages=sum(r.deliveries for r in trace.records),
        rounds_executed=len(trace.records),
        uninformed_at_end=last.n - sum(last.informed),
    )


def trace_lines(trace: Trace, spec: AlgorithmSpec):
    """JSON-serializable objects for a trace: the header, then one per configuration.

    Line ``t`` carries the configuration at the start of round ``t`` together
    with that round's edges and sender count. The closing configuration has
    no round attached, so its edges are empty and ``messages_sent`` is 0.
    """
    yield trace.header()
    for i, cfg in enumerate(trace.configs):
        rec = trace.records[i] if i < len(trace.records) else None
        edges = rec.edges.edge_list() if rec is not None and rec.edges is not None else []
        yield {
            "t": cfg.t,
            "edges": edges,
            "states": [spec.state_to_json(s) for s in cfg.states],
            "informed": list(cfg.informed),
            "messages_sent": rec.messages_sent if rec is not None else 0,
        }


def write_trace(trace: Trace, spec: AlgorithmSpec, fh: IO[str]) -> None:
    for obj in trace_lines(trace, spec):
        fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
