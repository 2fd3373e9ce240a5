"""Command-line front end: ``rank2locc <command> [options]``.

Standard output carries one JSON document per invocation; diagnostics go to
standard error. Exit status: 0 success, 1 oracle violations, 2 unreadable
input, 3 infeasible plan request, 4 simulation divergence or failed
certification.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import _config
from . import extended_complex as ec
from .extended_complex import SpecialS
from .lambda_space import LambdaPoint, canonical, classify, concurrences, is_truly_multipartite, xi
from .oracle import SUITES, PovmStyle, run_suite
from .simulator import (
    DecompositionError,
    SimulationDivergence,
    branch_report,
    certify,
    execute_protocol,
)
from .transform import (
    InfeasibleTransformation,
    ProtocolPlan,
    aggregate_residuals,
    check_feasible,
    in_l_i,
    is_ancestor,
    ns_pair,
    plan_protocol,
)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGENCE = 4


class InputError(ValueError):
    """Input that cannot be read or decoded."""


def _load_json(text: str):
    """Inline JSON, or the path of a file holding it."""
    try:
        if os.path.exists(text):
            with open(text, encoding="utf-8") as fh:
                return json.load(fh)
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {text!r}: {exc}") from exc


def _load_point(text: str) -> LambdaPoint:
    try:
        return LambdaPoint.from_json(_load_json(text))
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"not a parameter point: {exc}") from exc


def _s_json(s):
    return s.value if isinstance(s, SpecialS) else s


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_classify(args) -> int:
    lam = _load_point(args.input)
    out = {"lambda": lam.to_json(), "class": classify(lam).to_json()}
    out["concurrences"] = concurrences(lam) if lam.z is not ec.INF else concurrences(canonical(lam))
    _emit(out)
    return EXIT_OK


def cmd_check(args) -> int:
    verdict = check_feasible(_load_point(args.input), _load_point(args.target))
    _emit(verdict.to_json())
    return EXIT_OK


def cmd_plan(args) -> int:
    try:
        plan = plan_protocol(_load_point(args.input), _load_point(args.target))
    except InfeasibleTransformation as exc:
        print(f"infeasible: {exc.verdict.detail}", file=sys.stderr)
        _emit(exc.verdict.to_json())
        return EXIT_INFEASIBLE
    _emit(plan.to_json())
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        plan = ProtocolPlan.from_json(_load_json(args.plan))
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"not a protocol plan: {exc}") from exc
    try:
        branches = execute_protocol(plan)
    except (SimulationDivergence, DecompositionError) as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        _emit({"certified": False, "certification": str(exc)})
        return EXIT_DIVERGENCE
    ok, message = certify(plan, branches)
    _emit(
        {
            "branches": branch_report(branches),
            "aggregate_residuals": aggregate_residuals(plan),
            "certified": ok,
            "certification": message,
        }
    )
    if not ok:
        print(f"certification failed: {message}", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


def cmd_invariants(args) -> int:
    lam = _load_point(args.input)
    n, s = ns_pair(lam)
    out = {"lambda": lam.to_json(), "n": n, "s": _s_json(s)}
    if is_truly_multipartite(lam):
        out.update({"xi": xi(lam), "in_L_i": in_l_i(lam), "ancestor": is_ancestor(lam)})
    else:
        print("xi and the class flags need a truly multipartite point", file=sys.stderr)
    _emit(out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = _load_json(args.spec) if args.spec else {}
    suite = args.suite or spec.get("suite")
    if suite not in SUITES:
        raise InputError(f"suite must be one of {SUITES}, got {suite!r}")
    trials = args.trials if args.trials is not None else int(spec.get("trials", 100))
    parties = args.parties if args.parties is not None else int(spec.get("parties", 3))
    style = args.style or spec.get("style")
    if style is not None:
        PovmStyle(style)
    seed = args.seed if args.seed is not None else int(spec.get("seed", 0))
    report = run_suite(suite, trials, seed, parties=parties, style=style)
    _emit(report)
    return EXIT_VIOLATIONS if report["violations"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rank2locc", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--tolerance",
        type=float,
        default=None,
        help="override the shared 1e-9 tolerance used throughout the package",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def point_args(p, target=False):
        p.add_argument("--input", required=True, help="parameter point: JSON file or inline JSON")
        if target:
            p.add_argument("--target", required=True, help="target point: JSON file or inline JSON")

    p = sub.add_parser("classify", help="state class and concurrences of a point")
    point_args(p)
    p.set_defaults(func=cmd_classify)
    p = sub.add_parser("check", help="decide whether a deterministic transformation exists")
    point_args(p, target=True)
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("plan", help="synthesize a measurement protocol")
    point_args(p, target=True)
    p.set_defaults(func=cmd_plan)
    p = sub.add_parser("simulate", help="execute a plan on statevectors and certify it")
    p.add_argument("--plan", required=True, help="plan JSON (file or inline), as printed by `plan`")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("invariants", help="n, s, xi, L_i membership and ancestor flag")
    point_args(p)
    p.set_defaults(func=cmd_invariants)
    p = sub.add_parser("oracle", help="run a seeded validation suite")
    p.add_argument("--spec", help="suite description JSON: {suite, trials, parties, style, seed}")
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--trials", type=int)
    p.add_argument("--parties", type=int, help="party count (0 draws 3..6 per trial in the extraction suite)")
    p.add_argument("--style", choices=[s.value for s in PovmStyle])
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    previous = _config.settings.tol
    if args.tolerance is not None:
        if not args.tolerance > 0:
            print("--tolerance must be positive", file=sys.stderr)
            return EXIT_PARSE
        _config.settings.tol = args.tolerance
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    finally:
        _config.settings.tol = previous


if __name__ == "__main__":
    sys.exit(main())
