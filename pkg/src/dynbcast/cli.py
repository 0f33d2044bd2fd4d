"""Command-line front end: ``run``, ``sweep`` and ``check``.

Exit codes: 0 success, 1 property or expectation failed, 2 usage error,
3 configuration cap hit during exhaustive checking.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence, Union

from .adversaries import adversary_from_name
from .algorithms import Countdown, algorithm_from_name
from .checker import ConfigurationCapExceeded, verify_invariants, verify_universal_stabilization
from .engine import default_horizon, run, stabilization_bound, write_trace

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

SUMMARY_FIELDS = (
    "n",
    "rounds_to_all_informed",
    "rounds_to_stabilization",
    "peak_counter_value",
    "peak_state_bits",
    "total_messages",
)


class UsageError(ValueError):
    pass


@dataclass
class Scenario:
    algorithm: str = "countdown"
    adversary: str = "complete"
    n: int = 2
    seed: int = 0
    max_rounds: Union[int, str] = "auto"
    trace_path: Optional[str] = None

    @classmethod
    def from_file(cls, path: str) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read scenario {path}: {exc}") from None
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    def horizon(self) -> int:
        if self.max_rounds == "auto":
            return default_horizon(self.n)
        try:
            rounds = int(self.max_rounds)
        except (TypeError, ValueError):
            raise UsageError(f"max_rounds must be an integer or 'auto', got {self.max_rounds!r}") from None
        if rounds < 0:
            raise UsageError("max_rounds must be non-negative")
        return rounds

    def validate(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise UsageError(f"n must be a positive integer, got {self.n!r}")
        self.horizon()
        resolve(self.algorithm, self.adversary, self.seed)


def resolve(algorithm: str, adversary: str, seed: int):
    """Build the algorithm and adversary; a literal ``seed`` field in the
    adversary name (``random:seed:0.1``) takes the scenario seed."""
    adversary = ":".join(str(seed) if part == "seed" else part for part in adversary.split(":"))
    try:
        return algorithm_from_name(algorithm), adversary_from_name(adversary)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def execute(scenario: Scenario) -> dict:
    spec, adv = resolve(scenario.algorithm, scenario.adversary, scenario.seed)
    trace, metrics = run(
        spec,
        adv,
        scenario.n,
        scenario.horizon(),
        seed=scenario.seed,
        record_edges=scenario.trace_path is not None,
    )
    if scenario.trace_path:
        with open(scenario.trace_path, "w") as fh:
            write_trace(trace, spec, fh)
    row = {"algorithm": scenario.algorithm, "adversary": adv.name, "seed": scenario.seed}
    row.update(metrics.as_dict())
    if isinstance(spec, Countdown):
        row["stabilization_bound"] = stabilization_bound(scenario.n)
        row["within_bound"] = countdown_within_bounds(metrics)
    return row


def countdown_within_bounds(metrics) -> bool:
    n = metrics.n
    if metrics.rounds_to_stabilization is None or metrics.uninformed_at_end:
        return False
    if metrics.rounds_to_stabilization > stabilization_bound(n):
        return False
    return n < 2 or metrics.peak_counter_value <= 2 * (n - 1)


def format_rows(rows: list[dict], fmt: str, columns: Optional[Sequence[str]] = None) -> str:
    columns = list(columns or rows[0].keys())
    if fmt == "json":
        if len(rows) == 1:
            return json.dumps({k: rows[0][k] for k in columns}, sort_keys=False)
        return json.dumps([{k: r.get(k) for k in columns} for r in rows])
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue().rstrip("\n")
    widths = [max(len(c), *(len(str(r.get(c))) for r in rows)) for c in columns]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    for r in rows:
        lines.append("  ".join(str(r.get(c)).ljust(w) for c, w in zip(columns, widths)))
    return "\n".join(line.rstrip() for line in lines)


def cmd_run(scenario: Scenario, fmt: str = "table", out=None) -> int:
    out = out or sys.stdout
    scenario.validate()
    row = execute(scenario)
    columns = list(SUMMARY_FIELDS) + ["uninformed_at_end", "broadcast_failed"]
    print(format_rows([row], fmt, columns), file=out)
    if row["broadcast_failed"]:
        print(f"broadcast FAILED: {row['uninformed_at_end']} node(s) never informed", file=out)
    if row["rounds_to_stabilization"] == "never" or row["broadcast_failed"]:
        return EXIT_FAILED
    return EXIT_OK


def _sweep_row(args: tuple) -> dict:
    algorithm, adversary, n, seed = args
    return execute(Scenario(algorithm, adversary, n, seed))


def cmd_sweep(algorithm: str, adversary: str, n_list: Sequence[int], seeds: Sequence[int], fmt: str = "csv", jobs: int = 1, out=None) -> int:
    out = out or sys.stdout
    if not n_list or not seeds:
        raise UsageError("sweep needs at least one n and one seed")
    for n in n_list:
        Scenario(algorithm, adversary, n, seeds[0]).validate()
    tasks = [(algorithm, adversary, n, seed) for n in sorted(n_list) for seed in sorted(seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    print(format_rows(rows, fmt), file=out)
    if all(r.get("within_bound", True) for r in rows):
        return EXIT_OK
    return EXIT_FAILED


def cmd_check(n: int, depth_bound: int, config_cap: int = 10**7, fmt: str = "json", witness_path: Optional[str] = None, out=None) -> int:
    out = out or sys.stdout
    if not 2 <= n <= 5:
        raise UsageError(f"check supports 2 <= n <= 5, got {n}")
    if depth_bound < 0:
        raise UsageError("depth must be non-negative")
    spec = Countdown()
    kw = {"config_cap": config_cap, "allow_n5": n == 5}
    try:
        stab = verify_universal_stabilization(spec, n, depth_bound, **kw)
        inv = verify_invariants(spec, n, depth_bound, **kw)
    except ConfigurationCapExceeded as exc:
        print(f"aborted: {exc}", file=out)
        return EXIT_CAP
    ok = stab.all_stable_at_bound and not inv.invariant_violations
    if witness_path and inv.invariant_violations:
        with open(witness_path, "w") as fh:
            for line in inv.invariant_violations[0].as_dict(spec)["witness"]:
                fh.write(json.dumps(line, separators=(",", ":")) + "\n")
    if fmt == "json":
        print(json.dumps({"ok": ok, "stabilization": stab.as_dict(spec), "invariants": inv.as_dict(spec)}), file=out)
    else:
        row = {
            "n": n,
            "depth_bound": depth_bound,
            "reachable_count": stab.reachable_count,
            "all_stable_at_bound": stab.all_stable_at_bound,
            "worst_stabilization_depth": stab.worst_stabilization_depth,
            "invariant_violations": len(inv.invariant_violations),
        }
        print(format_rows([row], fmt), file=out)
    return EXIT_OK if ok else EXIT_FAILED


def _int_list(text: str) -> list[int]:
    """``"4,8,16"`` or ``"0-19"`` or a mix of both."""
    out: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        lo, sep, hi = part.partition("-")
        if sep and lo:
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynbcast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--scenario", metavar="FILE", help="JSON scenario; flags override its values")
    p.add_argument("--algorithm")
    p.add_argument("--adversary")
    p.add_argument("--nodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-rounds")
    p.add_argument("--trace", metavar="FILE", help="write a JSONL trace")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")

    p = sub.add_parser("sweep", help="run the cross product of node counts and seeds")
    p.add_argument("--algorithm", default="countdown")
    p.add_argument("--adversary", default="complete")
    p.add_argument("--nodes", required=True, help="e.g. 4,8,16")
    p.add_argument("--seeds", default="0", help="e.g. 0-19")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("table", "json", "csv"), default="csv")

    p = sub.add_parser("check", help="exhaustively verify Countdown for small n")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--depth", type=int)
    p.add_argument("--config-cap", type=int, default=10**7)
    p.add_argument("--witness", metavar="FILE", help="write the first violation as JSONL")
    p.add_argument("--format", choices=("table", "json", "csv"), default="json")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            scenario = Scenario.from_file(args.scenario) if args.scenario else Scenario()
            for flag, attr in (("algorithm", "algorithm"), ("adversary", "adversary"), ("nodes", "n"),
                               ("seed", "seed"), ("max_rounds", "max_rounds"), ("trace", "trace_path")):
                value = getattr(args, flag)
                if value is not None:
                    setattr(scenario, attr, value)
            return cmd_run(scenario, args.format)
        if args.command == "sweep":
            try:
                nodes, seeds = _int_list(args.nodes), _int_list(args.seeds)
            except ValueError:
                raise UsageError("--nodes and --seeds take comma lists or ranges") from None
            return cmd_sweep(args.algorithm, args.adversary, nodes, seeds, args.format, args.jobs)
        depth = args.depth if args.depth is not None else stabilization_bound(args.nodes)
        return cmd_check(args.nodes, depth, args.config_cap, args.format, args.witness)
    except UsageError as exc:
        print(f"dynbcast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
