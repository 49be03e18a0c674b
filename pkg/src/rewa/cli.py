"""Command-line entry point.

Exit codes: 0 when the run completes and its checks (if any) pass, 1
when a check fails, 2 for invalid input (bad flags, config, or
infeasible parameters).  Reports are byte-deterministic in (config,
seed); `--format` picks which document is echoed to stdout, both files
are always written to the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .datagen import GenerationError
from .encoder import FormatError, IncompatibleEncodingError
from .harness import config_from_text, write_report
from .harness.config import ExperimentConfig
from .harness.equivalence import run_equivalence
from .harness.failure import run_failure_modes
from .harness.hybrid import run_hybrid
from .harness.ranking import run_ranking, run_scaling
from .harness.reports import csv_bytes, report_json_bytes
from .harness.selftest import run_selftest

_COMMANDS = {
    "ranking": run_ranking,
    "scaling": run_scaling,
    "equivalence": run_equivalence,
    "failure-modes": run_failure_modes,
    "hybrid": run_hybrid,
    "selftest": run_selftest,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rewa",
        description="similarity-sketch experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="key=value file")
        p.add_argument("--seed", type=int, default=None, help="64-bit run seed")
        p.add_argument("--out", type=str, default=None, help="report directory")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return config_from_text(text, **overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ValueError, OSError) as exc:
        print(f"rewa: invalid input: {exc}", file=sys.stderr)
        return 2

    try:
        report, rows = _COMMANDS[args.command](cfg)
    except (ValueError, GenerationError, FormatError, IncompatibleEncodingError) as exc:
        print(f"rewa: invalid input: {exc}", file=sys.stderr)
        return 2

    write_report(cfg.out, args.command, report, rows)
    if args.format == "json":
        sys.stdout.write(report_json_bytes(report).decode("ascii"))
    else:
        sys.stdout.write(csv_bytes(rows).decode("ascii"))
    return 0 if report.get("passed", True) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
