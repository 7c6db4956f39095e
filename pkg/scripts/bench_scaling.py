"""Time adjacency, graph build and topological sort across mesh sizes.

    python3 scripts/bench_scaling.py --sizes 250 500 1000
"""

import argparse
import io
import json

from sweepgraph.cli import run


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[125, 250, 500, 1000],
                   help="grid width; height is half of it")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--omega", default="0.6,0.8")
    args = p.parse_args()

    rows = []
    for n in args.sizes:
        out = io.StringIO()
        run(["bench", "--nx", str(n), "--ny", str(n // 2), "--omega", args.omega,
             "--repeat", str(args.repeat)], out)
        doc = json.loads(out.getvalue())
        rows.append((doc["num_cells"], doc["build_seconds"]["min"], doc["sort_seconds"]["min"],
                     doc["total_seconds"]["min"]))

    print(f"{'cells':>10} {'build s':>9} {'sort s':>9} {'total s':>9} {'us/cell':>8}")
    for cells, build, sort, total in rows:
        print(f"{cells:>10} {build:>9.3f} {sort:>9.3f} {total:>9.3f} {1e6 * total / cells:>8.3f}")
    for (c0, *_, t0), (c1, *_, t1) in zip(rows, rows[1:]):
        print(f"{c0} -> {c1}: time x{t1 / t0:.2f} for cells x{c1 / c0:.2f}")


if __name__ == "__main__":
    main()
