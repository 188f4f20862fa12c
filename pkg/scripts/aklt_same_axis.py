"""Exact probability that two neighbouring AKLT sites get the same POVM axis.

Compares small patches with the i.i.d. value 1/3 and with a sampled estimate.
"""

import argparse

import numpy as np

from oneway.aklt import build_aklt, outcome_distribution, sample_povm
from oneway.stabilizer import Multigraph, cycle_graph, path_graph

PATCHES = {
    "pair (open)": path_graph(2),
    "path3 (open)": path_graph(3),
    "ring4 (open)": cycle_graph(4),
    "ring6 (open)": cycle_graph(6),
    "triple bond (closed)": Multigraph.from_edge_list(2, [(0, 1)] * 3),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print("patch,exact,sampled,iid")
    for name, lattice in PATCHES.items():
        state = build_aklt(lattice)
        exact = sum(p for axes, p in outcome_distribution(state).items() if axes[0] == axes[1])
        hits = 0
        for _ in range(args.samples):
            o = sample_povm(state, sites=[0, 1], seed=rng).outcome
            hits += o[0] == o[1]
        print(f"{name},{exact:.6f},{hits / args.samples:.4f},{1 / 3:.6f}")


if __name__ == "__main__":
    main()
