"""Command-line front end.

    interface-lab run <config> [--output-dir DIR]
    interface-lab validate <config>
    interface-lab list-experiments

Exit codes: 0 pass, 2 tolerance failure, 3 config error, 4 numerical
failure.  INTERFACE_LAB_OUTPUT overrides the output root and
INTERFACE_LAB_THREADS is recorded in the report (experiments are
single-process; any intra-experiment parallelism must not change outputs).
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import EXPERIMENTS, load_config, validate
from .errors import (
    ConfigError,
    EmptyInterior,
    InterfaceLabError,
    NoConvergence,
    QuadratureNotConverged,
    SolveFailure,
)
from .experiments import CSV_COLUMNS, run_experiment

EXIT_PASS = 0
EXIT_TOLERANCE = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="interface-lab",
                                description="Interface-model experiment runner")
    sub = p.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config")
    run_p.add_argument("--output-dir", default=None,
                       help="override the config output directory")
    val_p = sub.add_parser("validate", help="static checks only")
    val_p.add_argument("config")
    sub.add_parser("list-experiments", help="print the experiment catalog")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return EXIT_PASS

    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        diags = validate(config)
        for d in diags:
            print(f"diagnostic: {d}")
        if diags:
            return EXIT_CONFIG
        print("config ok")
        return EXIT_PASS

    out_dir = (args.output_dir or os.environ.get("INTERFACE_LAB_OUTPUT")
               or config.output_dir)
    try:
        report = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolveFailure, QuadratureNotConverged, NoConvergence, EmptyInterior) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InterfaceLabError as exc:
        print(f"experiment error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    threads = os.environ.get("INTERFACE_LAB_THREADS")
    if threads:
        report.config = dict(report.config, threads=int(threads))
    base = os.path.join(out_dir, config.experiment)
    report.write_json(base + ".json")
    report.write_csv(base + ".csv", CSV_COLUMNS[config.experiment])
    status = "PASS" if report.passed else "FAIL"
    for name, ok in sorted(report.checks.items()):
        print(f"[{config.experiment}] {name}: {'pass' if ok else 'FAIL'}")
    print(f"{status}: report at {base}.json")
    return EXIT_PASS if report.passed else EXIT_TOLERANCE


if __name__ == "__main__":
    raise SystemExit(main())
