"""Command-line front end: run scenarios, generate the built-in ones, audit
trace files and fuzz the simulator against the reachability oracle.

Exit codes: 0 success / audit pass, 1 usage or input error, 2 a property or
audit violation was found.
"""

import argparse
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from .engine import load_scenario, parse_scenario, run
from .errors import StickyManetError
from .metrics import (
    DELIVER,
    audit_confidentiality,
    delay_report,
    oracle_delivery_set,
    parse_trace_file,
    write_trace,
)
from .scenarios import BUILTIN_NAMES, build_builtin, random_scenario

TRACE_DIR_ENV = "STICKY_MANET_TRACE_DIR"


@dataclass
class RunConfig:
    scenario_path: str
    trace_out_path: str | None = None
    report_format: str = "text"
    seed: int = 0
    quiet: bool = False


def _trace_path(config: RunConfig) -> Path:
    if config.trace_out_path:
        return Path(config.trace_out_path)
    trace_dir = Path(os.environ.get(TRACE_DIR_ENV, "."))
    return trace_dir / (Path(config.scenario_path).stem + ".trace")


def _fmt(value) -> str:
    return "-" if value is None else f"{value:.9f}"


def _flow_label(scenario, key) -> str:
    if key is None:
        return "adhoc"
    flow = scenario.flows[key]
    kind = "policied" if flow.policied else "plain"
    return f"flow{key}({flow.src}->{flow.dst},{kind})"


def _print_report(report, scenario, fmt: str) -> None:
    rows = [("aggregate", report.aggregate)]
    rows += [(_flow_label(scenario, key), stats) for key, stats in report.per_flow.items()]
    if fmt == "csv":
        print("flow,originated,delivered,mean_s,min_s,max_s")
        for label, s in rows:
            mean = "" if s.mean is None else f"{s.mean:.9f}"
            lo = "" if s.min is None else f"{s.min:.9f}"
            hi = "" if s.max is None else f"{s.max:.9f}"
            print(f"{label},{s.originated},{s.delivered},{mean},{lo},{hi}")
    else:
        print("delay report:")
        for label, s in rows:
            print(
                f"  {label}: originated={s.originated} delivered={s.delivered} "
                f"mean={_fmt(s.mean)} min={_fmt(s.min)} max={_fmt(s.max)}"
            )


def _print_audit(result, quiet: bool) -> None:
    if result.passed:
        if not quiet:
            print("audit: PASS")
        return
    print(f"audit: FAIL ({len(result.violations)} violation(s))")
    for v in result.violations:
        print(f"  {v.time:.9f} node {v.node} msg {v.msg_id}: {v.reason}")


def cmd_run(config: RunConfig) -> int:
    try:
        scenario = load_scenario(config.scenario_path)
    except (OSError, StickyManetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    trace = run(scenario, config.seed)
    out = _trace_path(config)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace(trace, out)
    result = audit_confidentiality(trace, scenario)
    if not config.quiet:
        print(f"trace written: {out}")
        _print_report(delay_report(trace), scenario, config.report_format)
    _print_audit(result, config.quiet)
    return 0 if result.passed else 2


def cmd_gen(name: str, out_path: str) -> int:
    try:
        content = build_builtin(name)
    except KeyError:
        print(
            f"error: unknown scenario name {name!r} (choose from {', '.join(BUILTIN_NAMES)})",
            file=sys.stderr,
        )
        return 1
    out = Path(out_path)
    if isinstance(content, dict):
        out.mkdir(parents=True, exist_ok=True)
        for fname in sorted(content):
            (out / fname).write_text(content[fname], encoding="utf-8")
            print(f"wrote {out / fname}")
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(content, encoding="utf-8")
        print(f"wrote {out}")
    return 0


def _fuzz_check(scenario):
    """Run one scenario and compare every message's delivery set with the
    oracle; returns None or a failure description."""
    trace = run(scenario)
    delivered = {}
    for r in trace.records:
        if r.event == DELIVER:
            delivered.setdefault(r.msg_id, set()).add(r.node)
    all_groups = {spec.group for spec in scenario.nodes.values()}
    for msg_id, meta in trace.messages.items():
        permitted = meta.policy.permitted if meta.policy is not None else all_groups
        expected = oracle_delivery_set(scenario, meta.originator, permitted)
        actual = delivered.get(msg_id, set())
        if actual != expected:
            return f"message {msg_id}: delivered {sorted(actual)} != oracle {sorted(expected)}"
    result = audit_confidentiality(trace, scenario)
    if not result.passed:
        v = result.violations[0]
        return f"audit violation at {v.time:.9f}: node {v.node} msg {v.msg_id}: {v.reason}"
    return None


def cmd_fuzz(n_scenarios: int, max_nodes: int, seed: int) -> int:
    if n_scenarios <= 0 or max_nodes <= 0:
        print("error: scenario and node counts must be positive", file=sys.stderr)
        return 1
    rng = random.Random(seed)
    for index in range(n_scenarios):
        text = random_scenario(rng, max_nodes)
        failure = _fuzz_check(parse_scenario(text))
        if failure is not None:
            print(f"fuzz: scenario {index} FAILED (seed {seed}): {failure}")
            print("reproduce with this scenario file:")
            print(text, end="")
            return 2
    print(f"fuzz: {n_scenarios} scenarios passed (max nodes {max_nodes}, seed {seed})")
    return 0


def cmd_audit(trace_path: str, scenario_path: str) -> int:
    try:
        scenario = load_scenario(scenario_path)
        trace = parse_trace_file(trace_path)
    except (OSError, ValueError, StickyManetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = audit_confidentiality(trace, scenario)
    _print_audit(result, quiet=False)
    return 0 if result.passed else 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our mapping reserves 2 for violations."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sticky-manet",
        description="Policy-carrying flooding simulator for static ad hoc networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file and audit the result")
    p_run.add_argument("scenario")
    p_run.add_argument("--trace-out", metavar="PATH", default=None)
    p_run.add_argument("--report", choices=("text", "csv"), default="text")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--quiet", action="store_true")

    p_gen = sub.add_parser("gen", help="write a built-in scenario")
    p_gen.add_argument("name")
    p_gen.add_argument("out")

    p_fuzz = sub.add_parser("fuzz", help="check random scenarios against the oracle")
    p_fuzz.add_argument("n_scenarios", type=int)
    p_fuzz.add_argument("max_nodes", type=int)
    p_fuzz.add_argument("seed", type=int, nargs="?", default=0)

    p_audit = sub.add_parser("audit", help="audit an existing trace file")
    p_audit.add_argument("trace")
    p_audit.add_argument("scenario")

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "run":
        config = RunConfig(
            scenario_path=args.scenario,
            trace_out_path=args.trace_out,
            report_format=args.report,
            seed=args.seed,
            quiet=args.quiet,
        )
        return cmd_run(config)
    if args.command == "gen":
        return cmd_gen(args.name, args.out)
    if args.command == "fuzz":
        return cmd_fuzz(args.n_scenarios, args.max_nodes, args.seed)
    return cmd_audit(args.trace, args.scenario)


if __name__ == "__main__":
    sys.exit(main())
