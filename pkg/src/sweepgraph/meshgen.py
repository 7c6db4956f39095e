"""Test-mesh generators: structured and jittered triangulations, pinwheel quad rings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .mesh import DEGENERACY_FACTOR, Mesh, MeshError, build_adjacency, make_mesh

Pattern = Literal["uniform", "alternating", "random"]

MAX_JITTER_TRIES = 100


@dataclass(frozen=True)
class JitterSpec:
    amplitude: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.amplitude < 0.5:
            raise ValueError(f"jitter amplitude must be in [0, 0.5), got {self.amplitude}")


@dataclass(frozen=True)
class PinwheelSpec:
    num_quads: int
    r_in: float = 1.0
    r_out: float = 2.0
    slant: float = 0.0

    def __post_init__(self):
        if self.num_quads < 3:
            raise ValueError("a pinwheel needs at least 3 quads")
        if not 0.0 < self.r_in < self.r_out:
            raise ValueError("need 0 < r_in < r_out")


def structured_triangulation(
    nx: int, ny: int, pattern: Pattern = "uniform", seed: int | None = None
) -> Mesh:
    """Split an ``nx`` x ``ny`` grid on the unit square into ``2*nx*ny`` triangles.

    ``uniform`` cuts every square along (i, j)-(i+1, j+1); ``alternating``
    switches diagonals in a checkerboard; ``random`` picks each diagonal
    with a generator seeded by ``seed``.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.stack([gx.ravel(), gy.ravel()], axis=1)

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1

    if pattern == "uniform":
        flip = np.zeros(nx * ny, dtype=bool)
    elif pattern == "alternating":
        flip = (i + j) % 2 == 1
    elif pattern == "random":
        if seed is None:
            raise ValueError("random diagonal pattern needs a seed")
        flip = np.random.default_rng(seed).integers(0, 2, nx * ny).astype(bool)
    else:
        raise ValueError(f"unknown diagonal pattern {pattern!r}")

    lower = np.where(flip[:, None], np.stack([v00, v10, v01], 1), np.stack([v00, v10, v11], 1))
    upper = np.where(flip[:, None], np.stack([v10, v11, v01], 1), np.stack([v00, v11, v01], 1))
    cells = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return make_mesh(vertices, cells)


def boundary_vertices(mesh: Mesh) -> np.ndarray:
    adj = build_adjacency(mesh)
    return np.unique(adj.edges[adj.edge_cells[:, 1] < 0])


def jitter(mesh: Mesh, spec: JitterSpec) -> Mesh:
    """Randomly displace interior vertices of a triangle mesh.

    Each interior vertex, in index order, moves by a uniform offset in the
    disk of radius ``amplitude * shortest incident edge``. Moves that would
    flip or degenerate an incident triangle are redrawn, up to 100 times,
    after which the vertex stays put.
    """
    if not mesh.is_triangular:
        raise ValueError("jitter expects a triangle mesh")
    verts = mesh.vertices.copy()
    if spec.amplitude == 0.0:
        return make_mesh(verts, mesh.cell_vertices.reshape(-1, 3))

    tris = mesh.cell_vertices.reshape(-1, 3)
    min_area = DEGENERACY_FACTOR * mesh.bbox_scale**2
    rng = np.random.default_rng(spec.seed)
    fixed = np.zeros(mesh.num_vertices, dtype=bool)
    fixed[boundary_vertices(mesh)] = True

    order = np.argsort(tris.ravel(), kind="stable")
    counts = np.bincount(tris.ravel(), minlength=mesh.num_vertices)
    starts = np.concatenate([[0], np.cumsum(counts)])
    incident_of = order // 3

    for v in range(mesh.num_vertices):
        if fixed[v] or counts[v] == 0:
            continue
        incident = tris[incident_of[starts[v] : starts[v + 1]]]
        others = incident[incident != v]
        h = np.hypot(*(verts[others] - verts[v]).T).min()
        radius = spec.amplitude * h
        origin = verts[v].copy()
        for _ in range(MAX_JITTER_TRIES):
            r = radius * math.sqrt(rng.random())
            phi = 2.0 * math.pi * rng.random()
            verts[v] = origin + (r * math.cos(phi), r * math.sin(phi))
            p = verts[incident]
            area = 0.5 * (
                (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
            )
            if np.all(area >= min_area):
                break
        else:
            verts[v] = origin
    return make_mesh(verts, tris)


def jittered_triangulation(
    nx: int, ny: int, amplitude: float, seed: int, pattern: Pattern = "random"
) -> Mesh:
    """Random-diagonal structured grid followed by :func:`jitter`, one seed for both."""
    base = structured_triangulation(nx, ny, pattern, seed=seed if pattern == "random" else None)
    return jitter(base, JitterSpec(amplitude, seed))


def pinwheel_quads(spec: PinwheelSpec) -> Mesh:
    """Ring of ``num_quads`` convex quads around a central polygonal hole.

    Inner vertex ``k`` sits at angle ``2*pi*k/n`` on radius ``r_in`` and
    outer vertex ``k`` at that angle plus ``slant`` on radius ``r_out``.
    Quad ``k`` spans inner vertices ``k, k+1`` and outer vertices
    ``k, k+1``, so neighbors share the full spoke between them.
    """
    n = spec.num_quads
    phi = 2.0 * np.pi * np.arange(n) / n
    inner = spec.r_in * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    outer = spec.r_out * np.stack([np.cos(phi + spec.slant), np.sin(phi + spec.slant)], axis=1)
    vertices = np.concatenate([inner, outer])
    k = np.arange(n)
    kn = (k + 1) % n
    cells = np.stack([k, kn, n + kn, n + k], axis=1)
    try:
        return make_mesh(vertices, cells)
    except MeshError as exc:
        raise ValueError(
            f"pinwheel with n={n}, r_in={spec.r_in}, r_out={spec.r_out}, "
            f"slant={spec.slant} does not give convex non-degenerate quads: {exc}"
        ) from exc


@dataclass(frozen=True)
class PinwheelHit:
    slant: float
    angle: float
    cycle: list[int]


def scan_pinwheels(
    num_quads: int,
    slants,
    num_angles: int = 64,
    r_in: float = 1.0,
    r_out: float = 2.0,
) -> tuple[list[PinwheelHit], int]:
    """Search rings over ``slants`` and equi-spaced directions for full-ring cycles.

    Returns the hits and the number of (slant, direction) pairs examined;
    slants giving non-convex quads are skipped.
    """
    from .depgraph import Direction, build_graph, find_cycle

    hits = []
    examined = 0
    for slant in slants:
        try:
            mesh = pinwheel_quads(PinwheelSpec(num_quads, r_in, r_out, float(slant)))
        except ValueError:
            continue
        adj = build_adjacency(mesh)
        for k in range(num_angles):
            angle = 2.0 * math.pi * k / num_angles
            examined += 1
            cycle = find_cycle(build_graph(mesh, adj, Direction.from_angle(angle)))
            if cycle is not None and len(cycle) == num_quads:
                hits.append(PinwheelHit(float(slant), angle, cycle))
    return hits, examined
