#!/usr/bin/env python3
"""Reproduce every experiment in one pass.

Writes <run-name>.json and <run-name>.csv per run under --out and
prints a line per experiment.  The full pass takes a few minutes,
dominated by the corpus-size sweep; --quick shrinks datasets and grids
for a fast smoke pass (the quick scaling fit is too coarse to trust, it
only proves the plumbing).

Exit status is the number of checked experiments that failed.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from rewa.harness.config import ExperimentConfig
from rewa.harness.equivalence import run_equivalence
from rewa.harness.failure import run_failure_modes
from rewa.harness.hybrid import run_hybrid
from rewa.harness.ranking import (
    run_calibration,
    run_gap_sweep,
    run_ranking,
    run_scaling,
)
from rewa.harness.reports import write_report
from rewa.harness.selftest import run_selftest

QUICK = dict(
    N=64,
    universe=40_000,
    base_size=32,
    overlap_hi=16,
    overlap_lo=4,
    queries=4,
    n_grid=tuple(range(16, 513, 16)),
    cal_pairs=20,
    cal_seeds=50,
    landmarks=8,
    graph_V=96,
    graph_E=288,
    gap_levels=(16, 8, 4),
)

SCALING = dict(
    instantiation="boolean",
    N_list=tuple(2**p for p in range(8, 15)),
    universe=1_000_000,
    overlap_hi=24,
    queries=16,
    n_grid=tuple(range(16, 2049, 8)),
)

SCALING_QUICK = dict(
    instantiation="boolean",
    N_list=(64, 128, 256, 512),
    universe=200_000,
    overlap_hi=24,
    queries=16,
    n_grid=tuple(range(16, 513, 8)),
)


def plan(seed: int, quick: bool):
    base = dict(QUICK, seed=seed) if quick else dict(seed=seed)
    scaling = dict(SCALING_QUICK if quick else SCALING, seed=seed)
    runs = [("selftest", run_selftest, ExperimentConfig(**base))]
    for method in ("bloom", "minhash", "countmin", "rff"):
        runs.append(
            (f"equivalence-{method}", run_equivalence, ExperimentConfig(**base, method=method))
        )
    for inst in ("boolean", "natural", "real", "tropical", "product"):
        runs.append(
            (f"ranking-{inst}", run_ranking, ExperimentConfig(**base, instantiation=inst))
        )
    for inst in ("boolean", "natural", "tropical"):
        runs.append(
            (f"calibration-{inst}", run_calibration, ExperimentConfig(**base, instantiation=inst))
        )
    runs.append(("gap-sweep", run_gap_sweep, ExperimentConfig(**base)))
    runs.append(("failure-modes", run_failure_modes, ExperimentConfig(**base)))
    runs.append(("hybrid", run_hybrid, ExperimentConfig(**base, instantiation="product")))
    runs.append(("scaling", run_scaling, ExperimentConfig(**scaling)))
    return runs


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("reports"))
    ap.add_argument("--quick", action="store_true", help="small datasets, fast pass")
    args = ap.parse_args()

    failures = 0
    for name, runner, cfg in plan(args.seed, args.quick):
        t0 = time.monotonic()
        report, rows = runner(cfg)
        write_report(args.out, name, report, rows)
        elapsed = time.monotonic() - t0
        verdict = report.get("passed")
        if verdict is None:
            note = summarize(report)
        else:
            note = "passed" if verdict else "FAILED"
            failures += not verdict
        print(f"{name:<22} {elapsed:7.1f}s  {note}", flush=True)
    return failures


def summarize(report: dict) -> str:
    if report["experiment"] == "ranking":
        n = report["minimal_n"]
        return f"minimal n = {n}" if report["reached"] else "grid exhausted"
    if report["experiment"] == "scaling":
        fit = report["log_N_fit"]
        if fit.get("omitted"):
            return "fit omitted"
        return f"slope {fit['slope']:.1f}, R2 {fit['r_squared']:.3f}"
    if report["experiment"] == "calibration":
        cal = report["calibration"]
        return f"alpha {cal['alpha']:.2f}, R2 {cal['r_squared']:.4f}"
    if report["experiment"] == "gap_sweep":
        ns = [e["minimal_n"] for e in report["levels"]]
        return f"minimal n per gap {ns}"
    return "done"


if __name__ == "__main__":
    sys.exit(main())
