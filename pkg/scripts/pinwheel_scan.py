"""Scan pinwheel quad rings for directed cycles and report the ring winding.

    python3 scripts/pinwheel_scan.py --quads 3 12 --angles 256
"""

import argparse
import math

import numpy as np

from sweepgraph import Direction, PinwheelSpec, audit_cycle, build_adjacency, pinwheel_quads
from sweepgraph.meshgen import scan_pinwheels


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--quads", type=int, nargs=2, default=(3, 12), metavar=("MIN", "MAX"))
    p.add_argument("--slant-max", type=float, default=1.5)
    p.add_argument("--slant-step", type=float, default=0.05)
    p.add_argument("--angles", type=int, default=256)
    p.add_argument("--rin", type=float, default=1.0)
    p.add_argument("--rout", type=float, default=2.0)
    args = p.parse_args()

    steps = int(round(args.slant_max / args.slant_step))
    slants = np.round(np.arange(-steps, steps + 1) * args.slant_step, 10)
    total_hits = 0
    print(f"{'n':>3} {'convex slants':>14} {'cases':>7} {'cycles':>7} {'winding/2pi':>12}")
    for n in range(args.quads[0], args.quads[1] + 1):
        hits, examined = scan_pinwheels(n, slants, args.angles, args.rin, args.rout)
        windings = set()
        convex = 0
        for s in slants:
            try:
                mesh = pinwheel_quads(PinwheelSpec(n, args.rin, args.rout, float(s)))
            except ValueError:
                continue
            convex += 1
            audit = audit_cycle(
                mesh, build_adjacency(mesh), range(n), Direction(1, 0), require_dependency=False
            )
            windings.add(round(audit.winding / (2 * math.pi), 9))
        total_hits += len(hits)
        print(f"{n:>3} {convex:>14} {examined:>7} {len(hits):>7} {sorted(windings)!s:>12}")
        for hit in hits[:3]:
            print(f"    slant={hit.slant} angle={hit.angle:.6f} cycle={hit.cycle}")
    print(f"total full-ring cycles: {total_hits}")


if __name__ == "__main__":
    main()
