"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 invalid mesh, 3 cycle-related result.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

from .depgraph import (
    GRAZING_TOL,
    CycleFound,
    Direction,
    audit_cycle,
    build_graph,
    find_cycle,
    level_schedule,
    topo_sort,
)
from .mesh import MeshError, build_adjacency, read_mesh, serialize_mesh
from .meshgen import JitterSpec, PinwheelSpec, jitter, pinwheel_quads, structured_triangulation
from .sweep import TransportProblem, sweep_levels, sweep_solve

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_CYCLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _direction(args) -> Direction:
    if args.omega is not None and args.angle is not None:
        raise UsageError("give either --omega or --angle, not both")
    if args.angle is not None:
        return Direction.from_angle(args.angle)
    if args.omega is None:
        raise UsageError("a direction is required: --omega X,Y or --angle RAD")
    try:
        ox, oy = (float(t) for t in args.omega.split(","))
        return Direction(ox, oy)
    except ValueError as exc:
        raise UsageError(f"bad --omega {args.omega!r}: {exc}") from None


def _add_direction(p):
    p.add_argument("--omega", help="direction as X,Y (normalized; use --omega=-1,0 for negatives)")
    p.add_argument("--angle", type=float, help="direction angle in radians")
    p.add_argument("--tol", type=float, default=GRAZING_TOL, help="grazing tolerance")


def _add_output(p, formats=("json",)):
    p.add_argument("--format", choices=formats, default="json")
    p.add_argument("--output", "-o", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sweepgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", help="check mesh conformity and non-degeneracy")
    p.add_argument("--mesh", required=True)
    _add_output(p)

    for name, help_ in [
        ("order", "sweep order for a direction"),
        ("levels", "wavefront level schedule"),
        ("cycles", "report a dependency cycle, if any"),
        ("audit", "turning-angle audit of the first dependency cycle"),
        ("graph", "dependency graph edges"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--mesh", required=True)
        _add_direction(p)
        _add_output(p, ("json", "csv") if name in ("order", "levels") else ("json",))

    p = sub.add_parser("sweep", help="upwind sweep for one direction")
    p.add_argument("--mesh", required=True)
    _add_direction(p)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--source", type=float, default=0.0)
    p.add_argument("--inflow", type=float, default=1.0)
    p.add_argument("--parallel", action="store_true", help="level-by-level vectorized sweep")
    _add_output(p, ("json", "csv"))

    p = sub.add_parser("gen", help="generate a mesh file")
    gen = p.add_subparsers(dest="kind", parser_class=_Parser)
    g = gen.add_parser("structured")
    g.add_argument("--nx", type=int, required=True)
    g.add_argument("--ny", type=int, required=True)
    g.add_argument("--pattern", choices=["uniform", "alternating", "random"], default="uniform")
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", "-o")
    g.add_argument("--format", choices=["json"], default="json")
    g = gen.add_parser("pinwheel")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--slant", type=float, default=0.0)
    g.add_argument("--rin", type=float, default=1.0)
    g.add_argument("--rout", type=float, default=2.0)
    g.add_argument("--output", "-o")
    g.add_argument("--format", choices=["json"], default="json")

    p = sub.add_parser("bench", help="time graph build and topological sort")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    _add_direction(p)
    p.add_argument("--repeat", type=int, default=3)
    _add_output(p)
    return parser


def _emit(args, text: str, out) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def _json(obj) -> str:
    return json.dumps(obj, separators=(",", ":")) + "\n"


def _load(args):
    mesh = read_mesh(args.mesh)
    return mesh, build_adjacency(mesh)


def _cmd_validate(args, out):
    mesh, adj = _load(args)
    report = {
        "valid": True,
        "num_vertices": mesh.num_vertices,
        "num_cells": mesh.num_cells,
        "num_edges": adj.num_edges,
        "interior_edges": adj.num_interior,
        "boundary_edges": adj.num_boundary,
        "triangular": mesh.is_triangular,
    }
    _emit(args, _json(report), out)
    return EXIT_OK


def _graph(args):
    mesh, adj = _load(args)
    omega = _direction(args)
    return mesh, adj, omega, build_graph(mesh, adj, omega, args.tol)


def _cycle_report(graph, residual=None) -> dict:
    report = {"cycle": find_cycle(graph)}
    if residual is not None:
        report["residual"] = residual
    return report


def _cmd_order(args, out):
    _, _, _, graph = _graph(args)
    try:
        order = topo_sort(graph)
    except CycleFound as exc:
        _emit(args, _json(_cycle_report(graph, exc.residual)), out)
        return EXIT_CYCLE
    if args.format == "csv":
        lines = ["position,cell_id"] + [f"{i},{c}" for i, c in enumerate(order.order.tolist())]
        _emit(args, "\n".join(lines) + "\n", out)
    else:
        _emit(args, _json(order.to_json()), out)
    return EXIT_OK


def _cmd_levels(args, out):
    _, _, _, graph = _graph(args)
    try:
        sched = level_schedule(graph)
    except CycleFound as exc:
        _emit(args, _json(_cycle_report(graph, exc.residual)), out)
        return EXIT_CYCLE
    if args.format == "csv":
        lines = ["level,cell_id"]
        for k, cells in enumerate(sched.levels):
            lines.extend(f"{k},{c}" for c in cells.tolist())
        _emit(args, "\n".join(lines) + "\n", out)
    else:
        doc = sched.to_json()
        doc["num_levels"] = sched.num_levels
        doc["max_width"] = sched.max_width
        _emit(args, _json(doc), out)
    return EXIT_OK


def _cmd_graph(args, out):
    _, _, _, graph = _graph(args)
    _emit(args, _json(graph.to_json()), out)
    return EXIT_OK


def _cmd_cycles(args, out):
    _, _, _, graph = _graph(args)
    cycle = find_cycle(graph)
    if cycle is None:
        _emit(args, _json({"cycle": None, "status": "acyclic"}), out)
        return EXIT_OK
    _emit(args, _json({"cycle": cycle, "length": len(cycle), "status": "cycle"}), out)
    return EXIT_CYCLE


def _cmd_audit(args, out):
    mesh, adj, omega, graph = _graph(args)
    cycle = find_cycle(graph)
    if cycle is None:
        _emit(args, _json({"cycle": None, "status": "acyclic"}), out)
        return EXIT_CYCLE
    audit = audit_cycle(mesh, adj, cycle, omega, args.tol)
    _emit(args, _json(audit.to_json()), out)
    return EXIT_OK


def _cmd_sweep(args, out):
    mesh, adj, omega, graph = _graph(args)
    problem = TransportProblem.uniform(args.sigma, args.source, args.inflow, omega)
    try:
        if args.parallel:
            field = sweep_levels(mesh, adj, level_schedule(graph), problem, args.tol)
        else:
            field = sweep_solve(mesh, adj, topo_sort(graph), problem, args.tol)
    except CycleFound as exc:
        _emit(args, _json(_cycle_report(graph, exc.residual)), out)
        return EXIT_CYCLE
    _emit(args, field.to_csv() if args.format == "csv" else _json(field.to_json()), out)
    return EXIT_OK


def _cmd_gen(args, out):
    if args.kind == "structured":
        mesh = structured_triangulation(args.nx, args.ny, args.pattern, seed=args.seed)
        if args.jitter:
            mesh = jitter(mesh, JitterSpec(args.jitter, args.seed))
    elif args.kind == "pinwheel":
        mesh = pinwheel_quads(PinwheelSpec(args.n, args.rin, args.rout, args.slant))
    else:
        raise UsageError("gen needs 'structured' or 'pinwheel'")
    _emit(args, serialize_mesh(mesh), out)
    return EXIT_OK


def _stats(samples):
    return {
        "min": min(samples),
        "median": statistics.median(samples),
        "mean": statistics.fmean(samples),
    }


def _cmd_bench(args, out):
    omega = _direction(args)
    if args.repeat < 1:
        raise UsageError("--repeat must be at least 1")
    t0 = time.perf_counter()
    mesh = structured_triangulation(args.nx, args.ny)
    gen_time = time.perf_counter() - t0
    timings = {"adjacency": [], "build": [], "sort": [], "total": []}
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        adj = build_adjacency(mesh)
        t1 = time.perf_counter()
        graph = build_graph(mesh, adj, omega, args.tol)
        t2 = time.perf_counter()
        order = topo_sort(graph)
        t3 = time.perf_counter()
        timings["adjacency"].append(t1 - t0)
        timings["build"].append(t2 - t1)
        timings["sort"].append(t3 - t2)
        timings["total"].append(t3 - t0)
    report = {
        "num_cells": mesh.num_cells,
        "num_dependencies": int(len(graph.edges)),
        "repeat": args.repeat,
        "generate_seconds": gen_time,
        "sorted_cells": len(order),
    }
    report.update({f"{k}_seconds": _stats(v) for k, v in timings.items()})
    _emit(args, json.dumps(report, indent=2) + "\n", out)
    return EXIT_OK


COMMANDS = {
    "validate": _cmd_validate,
    "order": _cmd_order,
    "levels": _cmd_levels,
    "graph": _cmd_graph,
    "cycles": _cmd_cycles,
    "audit": _cmd_audit,
    "sweep": _cmd_sweep,
    "gen": _cmd_gen,
    "bench": _cmd_bench,
}


def _fail(args, code: int, kind: str, message: str, err) -> int:
    if getattr(args, "format", "json") == "json":
        err.write(_json({"error": kind, "message": message, "exit_code": code}))
    else:
        err.write(f"error: {message}\n")
    return code


def run(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    args = argparse.Namespace(format="json")
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        return _fail(args, EXIT_USAGE, "usage", str(exc), err)
    except MeshError as exc:
        return _fail(args, EXIT_INVALID, "invalid_mesh", str(exc), err)
    except OSError as exc:
        return _fail(args, EXIT_USAGE, "io", str(exc), err)
    except ValueError as exc:
        return _fail(args, EXIT_USAGE, "usage", str(exc), err)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
