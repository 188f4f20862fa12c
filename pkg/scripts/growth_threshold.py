"""Drift of heralded cluster growth across success probabilities.

Prints one CSV row per p and the interpolated zero crossing.
"""

import argparse
import csv
import sys

import numpy as np

from oneway.growth import GrowthParams, threshold_scan, zero_crossing


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p-min", type=float, default=0.55)
    ap.add_argument("--p-max", type=float, default=0.80)
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = threshold_scan(
        np.linspace(args.p_min, args.p_max, args.points),
        GrowthParams(args.p_min, args.steps, args.trials, args.seed),
    )
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["p", "drift", "analytic", "stderr", "z", "extinction"])
    for r in rows:
        z = (r.drift - r.analytic) / r.stderr if r.stderr else 0.0
        w.writerow([f"{r.p:.4f}", f"{r.drift:.5f}", f"{r.analytic:.5f}", f"{r.stderr:.5f}", f"{z:.2f}", f"{r.extinction:.4f}"])
    x = zero_crossing(rows)
    print(f"# zero crossing: {x:.5f}" if x is not None else "# no zero crossing in range", file=sys.stderr)


if __name__ == "__main__":
    main()
