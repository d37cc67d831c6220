"""``sipduality run <scenario.json>``: run verification suites and write reports.

Exit codes: 0 all checks pass, 1 some check failed, 2 the scenario file
could not be parsed, 3 a parameter is out of range, 4 the requested basis
is too large.  ``SIPDUALITY_OUT`` sets the output directory when ``--out``
is not given.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .fock import CapacityError, sector_size
from .scenario import Report, Scenario, ScenarioError, load_scenarios
from .suites import run_suite

__all__ = ["run", "run_file", "export_tables", "main", "EXIT_OK", "EXIT_FAIL", "EXIT_PARSE", "EXIT_VALIDATION", "EXIT_CAPACITY"]

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_VALIDATION, EXIT_CAPACITY = 0, 1, 2, 3, 4
OUT_ENV = "SIPDUALITY_OUT"
DEFAULT_OUT = "sipduality-out"


def _check_capacity(sc: Scenario, max_basis: int = 2_000_000) -> None:
    m = len(sc.alpha)
    n_max = max([sc.exact_n_max, sc.intertwine_n_max] + ([sc.n_max, *sc.convergence] if "unitary" in sc.suites else []))
    total = sum(sector_size(m, n) for n in range(n_max + 1))
    if total > max_basis:
        raise CapacityError(f"{total} configurations up to n_max = {n_max} exceed the limit {max_basis}")


def run(scenario: Scenario) -> Report:
    """Execute the scenario's suites in a fixed order and merge their records."""
    if scenario.suites:
        _check_capacity(scenario)
    records, tables = [], {}
    for suite in scenario.suites:
        recs, tabs = run_suite(suite, scenario)
        records.extend(recs)
        tables.update(tabs)
    return Report.merge(scenario.name, scenario.seed, scenario.suites, records, tables)


def run_file(path, seed: int | None = None, suites: list[str] | None = None) -> list[Report]:
    return [run(sc.with_overrides(seed=seed, suites=suites)) for sc in load_scenarios(path)]


def export_tables(report: Report, out_dir, fmt: str = "json") -> list[Path]:
    """Write the report (JSON or CSV) plus ``convergence.csv`` and ``trajectory.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        path = out / "report.json"
        path.write_text(report.to_json())
    elif fmt == "csv":
        path = out / "report.csv"
        path.write_text(report.records_csv())
    else:
        raise ValueError(f"unknown format {fmt!r}")
    written.append(path)
    for name in ("convergence", "trajectory"):
        if name in report.tables:
            path = out / f"{name}.csv"
            path.write_text(report.tables[name].to_csv())
            written.append(path)
    return written


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sipduality", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run verification suites from a scenario file")
    r.add_argument("scenario", help="scenario JSON file")
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    r.add_argument("--suites", help="comma-separated subset of suites; empty string runs none")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    suites = None
    if args.suites is not None:
        suites = [s.strip() for s in args.suites.split(",") if s.strip()]
    out_root = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    try:
        scenarios = load_scenarios(args.scenario)
        scenarios = [sc.with_overrides(seed=args.seed, suites=suites) for sc in scenarios]
        reports = [run(sc) for sc in scenarios]
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    status = EXIT_OK
    for report in reports:
        target = out_root if len(reports) == 1 else out_root / report.scenario
        export_tables(report, target, args.format)
        for rec in report.records:
            mark = "PASS" if rec.passed else "FAIL"
            print(f"{mark} {rec.suite}/{rec.name}: {rec.statistic:.3e} ({rec.comparison} {rec.threshold:.1e})")
        if not report.passed:
            status = EXIT_FAIL
    print(f"reports written to {out_root}")
    return status


if __name__ == "__main__":
    sys.exit(main())
