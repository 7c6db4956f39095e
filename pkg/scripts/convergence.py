"""Observed convergence of the upwind sweep against exact cell averages of exp(-sigma x).

    python3 scripts/convergence.py --sizes 8 16 32 64 --seeds 8 --amplitude 0.2
"""

import argparse
import math

import numpy as np

from sweepgraph import Direction, TransportProblem, build_adjacency
from sweepgraph.meshgen import jittered_triangulation
from sweepgraph.sweep import attenuation_cell_averages, solve_direction


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64])
    p.add_argument("--seeds", type=int, default=8)
    p.add_argument("--amplitude", type=float, default=0.2)
    p.add_argument("--sigma", type=float, default=1.0)
    args = p.parse_args()

    problem = TransportProblem.uniform(args.sigma, 0.0, 1.0, Direction(1.0, 0.0))
    prev = None
    print(f"{'n':>4} {'max err':>11} {'L1 err':>11} {'rate max':>9} {'rate L1':>8}")
    for n in args.sizes:
        emax, el1 = [], []
        for seed in range(args.seeds):
            mesh = jittered_triangulation(n, n, args.amplitude, seed=seed)
            psi = solve_direction(mesh, build_adjacency(mesh), problem).psi
            err = np.abs(psi - attenuation_cell_averages(mesh, args.sigma, 1.0))
            emax.append(err.max())
            el1.append(np.sum(err * mesh.areas))
        cur = (float(np.mean(emax)), float(np.mean(el1)))
        rates = ("", "") if prev is None else tuple(
            f"{math.log2(a / b):.3f}" for a, b in zip(prev, cur)
        )
        print(f"{n:>4} {cur[0]:>11.4e} {cur[1]:>11.4e} {rates[0]:>9} {rates[1]:>8}")
        prev = cur


if __name__ == "__main__":
    main()
