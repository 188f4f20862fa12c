"""Spanning fraction of the reduced AKLT graph on L x L brick walls.

Site axes are drawn i.i.d. uniform, which is the simplified model; the exact
POVM statistics are correlated (see aklt_same_axis.py).
"""

import argparse
import time

from oneway.aklt import percolation_mc


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=int, nargs="+", default=[4, 6, 8, 10, 12, 16])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("L,trials,spanning,fraction,half_width,seconds")
    for k, L in enumerate(args.L):
        t0 = time.perf_counter()
        r = percolation_mc(L, args.trials, seed=args.seed + k)
        print(f"{L},{r.trials},{r.spanning},{r.fraction:.4f},{r.half_width:.4f},{time.perf_counter() - t0:.2f}")


if __name__ == "__main__":
    main()
