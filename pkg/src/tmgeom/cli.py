"""Command-line entry point: ``tmgeom [SPEC] [--catalog NAME] [options]``."""

from __future__ import annotations

import argparse
import json
import sys

from .catalog import NAMES
from .expr import ExprError
from .geometry_base import GeometryError
from .metrics_tm import HypothesisViolation
from .specfile import SpecError, VerifySpec, from_catalog, load, parse_suites
from .suites import DEFAULT_NONVANISH, run

EXIT_OK, EXIT_FAILED, EXIT_SPEC = 0, 1, 2

GRAMMAR_HELP = """\
expressions:
  expr  := term (('+'|'-') term)*
  term  := unary (('*'|'/') unary)*
  unary := ('-'|'+') unary | power
  power := atom ('^' unary)?
  atom  := number | 'x' index | func '(' expr ')' | '(' expr ')'
  func  := sin | cos | exp | log | sqrt | tanh
'^' is right-associative and binds tighter than a leading minus: -x1^2 = -(x1^2).
"""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tmgeom",
        description="Verify tangent-bundle geometry identities on a Riemannian chart.",
        epilog=GRAMMAR_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("spec", nargs="?", help="spec file (key = value lines)")
    p.add_argument("--catalog", choices=NAMES, help="use a shipped chart instead of a spec file")
    p.add_argument("--suite", help="comma-separated suites: base, connection, hermitian, contact, dynamics, all")
    p.add_argument("--samples", type=int, help="sample points per check")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a check threshold")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument(
        "--nonvanish-threshold",
        type=float,
        default=DEFAULT_NONVANISH,
        help="lower bound used by 'non-vanishing at some sample' checks",
    )
    return p


def _resolve(args) -> VerifySpec:
    if args.spec and args.catalog:
        raise SpecError("give a spec file or --catalog, not both")
    if args.spec:
        spec = load(args.spec)
    elif args.catalog:
        spec = from_catalog(args.catalog)
    else:
        raise SpecError("a spec file or --catalog is required")
    if args.suite:
        spec.suites = parse_suites(args.suite)
    if args.samples is not None:
        if args.samples < 1:
            raise SpecError("--samples must be at least 1")
        spec.samples = args.samples
    if args.seed is not None:
        spec.seed = args.seed
    for item in args.tol:
        name, sep, value = item.partition("=")
        if not sep:
            raise SpecError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            spec.tolerances[name.strip()] = float(value)
        except ValueError:
            raise SpecError(f"--tol {name}: not a number: {value!r}") from None
    return spec


def format_text(report: dict) -> str:
    lines = [
        f"tmgeom {report['version']}  chart={report['chart']['name']} dim={report['chart']['dim']} "
        f"torsion={report['chart']['torsion']}  seed={report['seed']} samples={report['samples']}"
    ]
    for suite, data in report["suites"].items():
        lines.append(f"[{suite}] {'PASS' if data['passed'] else 'FAIL'}")
        for c in data["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            value = "n/a" if c["value"] is None else f"{c['value']:.3e}"
            extra = f"  flags: {', '.join(c['flags'])}" if c["flags"] else ""
            lines.append(
                f"  {status} {c['name']}: {c['statistic']}={value} {c['comparison']} {c['threshold']:.1e}"
                f" (n={c['samples']}){extra}"
            )
    lines.append("ALL PASS" if report["passed"] else "SOME CHECKS FAILED")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _resolve(args)
        report = run(spec, args.nonvanish_threshold)
    except (SpecError, ExprError, GeometryError, HypothesisViolation) as exc:
        print(f"tmgeom: error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(format_text(report))
    return EXIT_OK if report["passed"] else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
