#!/usr/bin/env python3
"""Plot minimal encoding width against corpus size from a scaling report.

Reads the JSON report written by `rewa scaling` (or scripts/run_all.py)
and draws minimal n against ln N with the fitted line.  Needs
matplotlib, which is not a package dependency; everything else in this
repository works without it.
"""

import argparse
import json
import math
import sys
from pathlib import Path


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("report", type=Path, help="scaling.json from a scaling run")
    ap.add_argument("--out", type=Path, default=Path("scaling.png"))
    args = ap.parse_args()

    doc = json.loads(args.report.read_text())
    if doc.get("experiment") != "scaling":
        print(f"{args.report} is not a scaling report", file=sys.stderr)
        return 2

    reached = [e for e in doc["per_N"] if e["reached"]]
    missed = [e for e in doc["per_N"] if not e["reached"]]
    if not reached:
        print("no corpus size reached the target rate; nothing to plot", file=sys.stderr)
        return 1

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [math.log(e["N"]) for e in reached]
    ys = [e["minimal_n"] for e in reached]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(xs, ys, zorder=3, label="measured minimal n")

    fit = doc["log_N_fit"]
    if not fit.get("omitted"):
        grid = [min(xs), max(xs)]
        ax.plot(
            grid,
            [fit["slope"] * x + fit["intercept"] for x in grid],
            "--",
            label=f"fit: {fit['slope']:.1f} ln N + {fit['intercept']:.0f} (R2 {fit['r_squared']:.3f})",
        )
    for e in missed:
        ax.axvline(math.log(e["N"]), color="red", alpha=0.3)

    ax.set_xlabel("ln N")
    ax.set_ylabel("minimal n reaching 1 - delta")
    ax.set_title("encoding width needed vs corpus size")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
