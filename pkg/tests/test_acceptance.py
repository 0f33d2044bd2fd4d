"""Acceptance suite. Each test prints one ``criterion N: PASS|FAIL`` line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import io
import json
import math

import pytest

from dynbcast.adversaries import (
    PathAdversary,
    adversary_from_name,
    complete_adversary,
    complete_edges,
    random_connected_adversary,
    spooling_adversary,
    static_adversary,
)
from dynbcast.algorithms import (
    BoundedFlood,
    Countdown,
    CountdownState,
    FloodForever,
    check_countdown_round,
    expected_attempt_values,
    progress_violations,
)
from dynbcast.cli import cmd_check
from dynbcast.core import InvariantViolation
from dynbcast.engine import default_horizon, run, stabilization_bound

SIZES = [2**i for i in range(1, 11)]
SEEDS = range(20)
PROBS = (0.0, 0.1, 0.5)


def report(number, ok, detail=""):
    print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else ""))


def adversary_grid():
    for n in SIZES:
        yield n, complete_adversary()
        yield n, PathAdversary()
        yield n, spooling_adversary()
        for p in PROBS:
            for seed in SEEDS:
                yield n, random_connected_adversary(seed, p)


def sync_violations(configs, n):
    """Recheck agreement and counter bounds on every configuration of a trace."""
    bad = []
    for cfg in configs:
        try:
            check_countdown_round(cfg.t, cfg.states, n)
        except InvariantViolation as exc:
            bad.append(str(exc))
            continue
        busy = {s for s in cfg.states if s.current != -1}
        if busy and busy != {CountdownState(*expected_attempt_values(cfg.t))}:
            bad.append(f"t={cfg.t}: {sorted(busy)}")
    return bad


@pytest.fixture(scope="module")
def countdown_runs():
    """One summary per run of the criterion 1 grid; traces are dropped after use."""
    spec = Countdown()
    rows = []
    for n, adv in adversary_grid():
        trace, m = run(spec, adv, n, check=False)
        rows.append({
            "n": n,
            "adversary": adv.name,
            "metrics": m,
            "sync": sync_violations(trace.configs, n),
            "progress": progress_violations(trace.configs),
        })
    return rows


def test_criterion_1_correct_at_scale(countdown_runs):
    bad = [(r["n"], r["adversary"]) for r in countdown_runs
           if not (r["metrics"].stabilized and r["metrics"].uninformed_at_end == 0)]
    report(1, not bad, f"{len(countdown_runs)} runs, {len(bad)} incorrect")
    assert not bad, bad[:5]


def test_criterion_2_linear_rounds(countdown_runs):
    bad = []
    for r in countdown_runs:
        n, got = r["n"], r["metrics"].rounds_to_stabilization
        limit = 4 * n + math.ceil(math.log2(n)) + 2
        assert limit == stabilization_bound(n)
        if got is None or got > limit:
            bad.append((n, r["adversary"], got, limit))
    worst = max(r["metrics"].rounds_to_stabilization / stabilization_bound(r["n"]) for r in countdown_runs
                if r["metrics"].stabilized)
    report(2, not bad, f"{len(bad)} over the bound, worst ratio {worst:.3f}")
    assert not bad, bad[:5]


def test_criterion_3_logarithmic_space(countdown_runs):
    bad = []
    for r in countdown_runs:
        n, m = r["n"], r["metrics"]
        bits_limit = 2 * (math.ceil(math.log2(2 * n)) + 1)
        if m.peak_counter_value > 2 * (n - 1) or m.peak_state_bits > bits_limit:
            bad.append((n, r["adversary"], m.peak_counter_value, m.peak_state_bits))
    report(3, not bad, f"{len(bad)} runs over the counter or bit limit")
    assert not bad, bad[:5]


def test_criterion_4_synchronization(countdown_runs):
    total = sum(len(r["sync"]) for r in countdown_runs)
    report(4, total == 0, f"{total} violations")
    assert total == 0, [r["sync"][:2] for r in countdown_runs if r["sync"]][:3]


def test_criterion_5_progress(countdown_runs):
    total = sum(len(r["progress"]) for r in countdown_runs)
    report(5, total == 0, f"{total} violations")
    assert total == 0, [r["progress"][:2] for r in countdown_runs if r["progress"]][:3]


def test_criterion_6_exhaustive_check():
    results = {}
    for n, depth in ((2, 11), (3, 16), (4, 20)):
        buf = io.StringIO()
        code = cmd_check(n, depth, out=buf)
        body = json.loads(buf.getvalue())
        results[n] = (code, body["ok"], body["stabilization"]["worst_stabilization_depth"])
    ok = all(code == 0 and passed for code, passed, _ in results.values())
    report(6, ok, "worst depths " + ", ".join(f"n={n}: {w}" for n, (_, _, w) in results.items()))
    assert ok, results


def test_criterion_7_flood_forever_spooling():
    bad = []
    spec = FloodForever()
    for n in range(2, 65):
        _, m = run(spec, spooling_adversary(), n, default_horizon(n))
        if m.rounds_to_all_informed != n - 1 or m.stabilized:
            bad.append((n, m.rounds_to_all_informed, m.rounds_to_stabilization))
    report(7, not bad, f"{len(bad)} of 63 sizes off")
    assert not bad, bad


def core_quiescence(k, m):
    _, alone = run(BoundedFlood(k), static_adversary(complete_edges(m), n=m), m)
    return alone.rounds_to_stabilization


def test_criterion_8_bounded_flood_sequestered():
    outcomes = []
    for k, m, length in ((3, 3, 6), (8, 4, 12)):
        n = m + length
        assert length >= core_quiescence(k, m)
        adv = f"sequester:{m}:{length}"
        _, flood = run(BoundedFlood(k), adversary_from_name(adv), n)
        _, cd = run(Countdown(), adversary_from_name(adv), n)
        flood_fails = flood.stabilized and flood.uninformed_at_end >= 1
        cd_ok = cd.stabilized and cd.uninformed_at_end == 0
        outcomes.append((k, m, length, flood.uninformed_at_end, flood_fails, cd_ok))
    ok = all(f and c for *_, f, c in outcomes)
    detail = "; ".join(f"(K={k},m={m},L={l}) flood leaves {u} uninformed, countdown {'ok' if c else 'fails'}"
                       for k, m, l, u, _, c in outcomes)
    report(8, ok, detail)
    assert ok, outcomes


def test_sequestered_core_runs_as_if_alone():
    """What the sequester schedule does guarantee: the core cannot tell it is
    not alone, and when it falls silent part of the path is still uninformed."""
    for k, m, length in ((3, 3, 6), (8, 4, 12)):
        spec = BoundedFlood(k)
        alone, _ = run(spec, static_adversary(complete_edges(m), n=m), m)
        quiet = len(alone.configs) - 1
        seq, _ = run(spec, adversary_from_name(f"sequester:{m}:{length}"), m + length)
        for a, b in zip(alone.configs, seq.configs[: quiet + 1]):
            assert a.states == b.states[:m]
        at_quiet = seq.configs[quiet]
        assert not all(at_quiet.informed[m:])


def test_criterion_9_golden_traces():
    s = CountdownState
    expected = [
        (s(0, 1), s(-1, -1)),
        (s(-1, 1), s(2, 2)),
        (s(1, 2), s(1, 2)),
        (s(0, 2), s(0, 2)),
        (s(-1, 2), s(-1, 2)),
    ]
    trace, m = run(Countdown(), complete_adversary(), 2)
    k2 = [c.states for c in trace.configs] == expected and m.rounds_to_stabilization == 4
    _, single = run(Countdown(), complete_adversary(), 1)
    n1 = single.rounds_to_stabilization == 1
    report(9, k2 and n1, f"K2 trace {'matches' if k2 else 'differs'}, n=1 stabilizes at {single.rounds_to_stabilization}")
    assert k2 and n1
