"""Command-line entry point: ``seqnorm {norm,diagnose,verify,demo-p1}``.

Every command emits a JSON run report (or a CSV trace with ``--format csv``)
to stdout or ``--out``.  Reports are deterministic for fixed inputs and seed,
apart from the ``timestamp`` field.

Exit codes: 0 ok / attains, 2 usage error or p = 1, 3 does_not_attain,
4 inconclusive, 5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from . import attainment as att
from .norm_solver import DEFAULT_LADDER, SolverConfig, ladder_norm
from .operators import OperatorSpec, SpecError, load_spec, op_novo1
from .sequence_space import SeqVec
from .verification import SUITES, run_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_ATTAIN = 3
EXIT_INCONCLUSIVE = 4
EXIT_VERIFY_FAIL = 5

VERDICT_EXIT = {
    att.ATTAINS: EXIT_OK,
    att.DOES_NOT_ATTAIN: EXIT_NOT_ATTAIN,
    att.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}

DEMO_P1_LADDER = (2, 4, 8, 16, 32, 64, 128, 256)


class UsageError(Exception):
    pass


def parse_ladder(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"ladder must be comma-separated integers, got {text!r}")
    if not sizes:
        raise argparse.ArgumentTypeError("ladder is empty")
    return sizes


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(tol=args.tol, restarts=args.restarts, seed=args.seed, ladder=args.ladder)
    except ValueError as exc:
        raise UsageError(str(exc))


def _load(args) -> OperatorSpec:
    try:
        return load_spec(args.spec, p=args.p, q=args.q)
    except FileNotFoundError:
        raise UsageError(f"spec file not found: {args.spec}")
    except (SpecError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed spec {args.spec}: {exc}")


def run_report(command: str, results: dict, seed: int, spec: OperatorSpec | None = None,
               config: dict | None = None, extra_inputs: dict | None = None) -> dict:
    inputs: dict[str, Any] = {"config": config or {}}
    if spec is not None:
        inputs["spec_digest"] = spec.digest()
        inputs["spec"] = spec.to_dict()
    inputs.update(extra_inputs or {})
    return {
        "command": command,
        "inputs": inputs,
        "results": results,
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------


def cmd_norm(args) -> int:
    T = _load(args)
    cfg = _config(args)
    res = ladder_norm(T, cfg)
    if args.format == "csv":
        _emit(att.trace_from_ladder(T, res).to_csv(), args.out)
    else:
        _emit(dumps_report(run_report("norm", res.to_dict(), cfg.seed, T, cfg.to_dict())), args.out)
    print(f"norm ~ {res.estimate.value!r} (sections {list(cfg.ladder)})", file=sys.stderr)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    T = _load(args)
    cfg = _config(args)
    try:
        rep = att.diagnose(T, cfg, window=args.window, tau=args.tau)
    except att.PEqualsOneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.format == "csv":
        _emit(rep.trace.to_csv(), args.out)
    else:
        config = dict(cfg.to_dict(), window=args.window, tau=args.tau)
        _emit(dumps_report(run_report("diagnose", rep.to_dict(), cfg.seed, T, config)), args.out)
    print(f"verdict: {rep.verdict} (norm ~ {rep.norm_value!r})", file=sys.stderr)
    return VERDICT_EXIT[rep.verdict]


def cmd_verify(args) -> int:
    checks = run_suite(args.suite, seed=args.seed)
    passed = all(c.passed for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  [{c.detail}]", file=sys.stderr)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "passed", "detail"])
        for c in checks:
            w.writerow([c.name, c.passed, c.detail])
        _emit(buf.getvalue(), args.out)
    else:
        results = {"suite": args.suite, "passed": passed, "checks": [c.to_dict() for c in checks]}
        _emit(dumps_report(run_report("verify", results, args.seed, extra_inputs={"suite": args.suite})), args.out)
    return EXIT_OK if passed else EXIT_VERIFY_FAIL


def demo_p1(ladder: Sequence[int] = DEMO_P1_LADDER, q: float = 2.0) -> dict:
    """Ladder of the diagonal n/(n+1) at p = 1: maximizers e_n, values n/(n+1) < 1."""
    T = op_novo1(1.0, q)
    res = ladder_norm(T, SolverConfig(ladder=tuple(ladder)))
    steps = []
    for e in res.trace:
        n = e.section
        steps.append({
            "section": n,
            "value": e.value,
            "expected": n / (n + 1),
            "certificate_index": int(e.certificate.support_length()),
            "certificate_is_e_n": e.certificate == SeqVec.unit(n, n),
        })
    return {
        "operator": T.to_dict(),
        "steps": steps,
        "sup_below_one": all(s["value"] < 1.0 for s in steps),
        "proxy_applicable": False,
        "verdict": None,
        "note": (
            "At p = 1 the maximizing sequence e_n is not weakly null in l_1 "
            "(pair it with the all-ones functional in l_inf), yet the norm 1 is "
            "never reached: every section value n/(n+1) is below 1. The weak-null "
            "proxy is not applicable here and no verdict is issued."
        ),
    }


def cmd_demo_p1(args) -> int:
    ladder = args.ladder if args.ladder != DEFAULT_LADDER else DEMO_P1_LADDER
    q = 2.0 if args.q is None else args.q
    results = demo_p1(ladder, q)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "value", "expected", "certificate_index"])
        for s in results["steps"]:
            w.writerow([s["section"], repr(s["value"]), repr(s["expected"]), s["certificate_index"]])
        _emit(buf.getvalue(), args.out)
    else:
        config = {"ladder": list(ladder), "q": q}
        _emit(dumps_report(run_report("demo-p1", results, args.seed, config=config)), args.out)
    for s in results["steps"]:
        print(f"n={s['section']:>4}  value={s['value']:.12f}  certificate=e_{s['certificate_index']}", file=sys.stderr)
    print(results["note"], file=sys.stderr)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--p", type=float, default=None, help="source exponent (overrides the spec file)")
    solver.add_argument("--q", type=float, default=None, help="target exponent (overrides the spec file)")
    solver.add_argument("--ladder", type=parse_ladder, default=DEFAULT_LADDER, help="section sizes, e.g. 2,4,8")
    solver.add_argument("--tol", type=float, default=1e-12)
    solver.add_argument("--restarts", type=int, default=8)

    parser = argparse.ArgumentParser(prog="seqnorm", description="Norm attainment diagnostics for l_p -> l_q operators.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common, solver], help="ladder norm estimate with trace")
    p.add_argument("spec", help="operator spec JSON file")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("diagnose", parents=[common, solver], help="attainment verdict")
    p.add_argument("spec", help="operator spec JSON file")
    p.add_argument("--window", type=int, default=att.DEFAULT_WINDOW)
    p.add_argument("--tau", type=float, default=att.DEFAULT_TAU)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo-p1", parents=[common, solver], help="the p = 1 canonical-basis example")
    p.set_defaults(func=cmd_demo_p1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
