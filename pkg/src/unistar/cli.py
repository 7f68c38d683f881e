"""Command line entry point: ``unistar verify <suite> --scenario PATH ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from .scenario import DUP_MODES, DuplicateAssignmentWarning, ScenarioError, load_scenario, shipped
from .suites import SUITES, Loaded, run_suite

THREADS_ENV = "UNISTAR_THREADS"


def _resolve(path: str) -> Path:
    """A path, or the name of a shipped scenario such as ``r4_paper``."""
    p = Path(path)
    if p.exists():
        return p
    cand = shipped(p.stem if p.suffix == ".scn" else path)
    if cand.exists():
        return cand
    raise ScenarioError("no such scenario file", str(path))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unistar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run a verification suite on scenario files")
    v.add_argument("suite", choices=SUITES + ("all",))
    v.add_argument("--scenario", action="append", required=True, metavar="PATH",
                   help="scenario file or shipped scenario name; repeatable")
    v.add_argument("--order", type=int, help="jet truncation order N")
    v.add_argument("--deg-cap", type=int, help="degree cap of the monomial sweep")
    v.add_argument("--dup-mode", choices=DUP_MODES, help="duplicate-assignment resolution")
    v.add_argument("--json", metavar="PATH", help="also write the report as JSON")
    sub.add_parser("list", help="list shipped scenarios")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for p in sorted(shipped("x").parent.glob("*.scn")):
            print(p.stem)
        return 0
    threads = os.environ.get(THREADS_ENV)
    if threads is not None and not threads.isdigit():
        print(f"error: {THREADS_ENV} must be a positive integer", file=sys.stderr)
        return 2
    items = []
    try:
        for path in args.scenario:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DuplicateAssignmentWarning)
                scn, g = load_scenario(_resolve(path), args.dup_mode)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            items.append(Loaded(scn, g))
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_suite(args.suite, items, order=args.order, deg_cap=args.deg_cap)
    print(report.human())
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_json(), indent=2, default=str))
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
