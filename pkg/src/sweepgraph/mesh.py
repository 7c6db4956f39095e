"""2D polygonal meshes: parsing, validation and edge adjacency.

Cells are stored in compressed form (``cell_offsets`` / ``cell_vertices``)
so that triangle meshes with millions of cells stay cheap to build. Every
mesh is validated on construction and its cells are reordered to be
counterclockwise.

Half-edge ``h`` is the directed edge of cell ``cell_of[h]`` that starts
at vertex ``cell_vertices[h]`` and ends at the next vertex of the same cell.
Adjacency arrays are indexed by half-edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

BOUNDARY = -1

DEGENERACY_FACTOR = 1e-12
# relative distance under which a vertex counts as lying on an edge
ON_EDGE_FACTOR = 1e-10


class MeshError(ValueError):
    """Invalid mesh input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshSyntaxError(MeshError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    """Validated polygonal mesh with counterclockwise cells.

    Use :func:`make_mesh` or :func:`parse_mesh` to construct one.
    """

    vertices: np.ndarray
    cell_offsets: np.ndarray
    cell_vertices: np.ndarray

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cell_offsets) - 1

    @cached_property
    def cell_sizes(self) -> np.ndarray:
        return np.diff(self.cell_offsets)

    @cached_property
    def is_triangular(self) -> bool:
        return bool(np.all(self.cell_sizes == 3))

    @cached_property
    def cell_of(self) -> np.ndarray:
        """Owning cell of every half-edge."""
        return np.repeat(np.arange(self.num_cells), self.cell_sizes)

    @cached_property
    def next_half_edge(self) -> np.ndarray:
        return _next_in_cell(self.cell_offsets)

    @cached_property
    def bbox_scale(self) -> float:
        if self.num_vertices == 0:
            return 0.0
        extent = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(extent.max())

    @cached_property
    def areas(self) -> np.ndarray:
        return _signed_areas(self.vertices, self.cell_offsets, self.cell_vertices)

    @cached_property
    def centroids(self) -> np.ndarray:
        """Vertex averages of each cell (inside the cell, since cells are convex)."""
        pts = self.vertices[self.cell_vertices]
        sums = np.add.reduceat(pts, self.cell_offsets[:-1], axis=0)
        return sums / self.cell_sizes[:, None]

    def cell(self, i: int) -> tuple[int, ...]:
        lo, hi = self.cell_offsets[i], self.cell_offsets[i + 1]
        return tuple(int(v) for v in self.cell_vertices[lo:hi])

    def cells(self) -> list[tuple[int, ...]]:
        return [self.cell(i) for i in range(self.num_cells)]

    def same_as(self, other: "Mesh") -> bool:
        """Exact equality of coordinates and connectivity."""
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cell_offsets, other.cell_offsets)
            and np.array_equal(self.cell_vertices, other.cell_vertices)
        )


class EdgeRecord(NamedTuple):
    neighbor: int
    normal: tuple[float, float]
    length: float
    midpoint: tuple[float, float]


@dataclass(frozen=True, eq=False)
class EdgeAdjacency:
    """Per half-edge neighbor, outward unit normal, length and midpoint.

    ``edges`` lists the undirected edges as sorted vertex pairs and
    ``edge_cells`` the (one or two) incident cells, ``BOUNDARY`` padded.
    For an interior edge ``edge_half[e, 0]`` belongs to ``edge_cells[e, 0]``.
    """

    mesh: Mesh
    neighbor: np.ndarray
    twin: np.ndarray
    normal: np.ndarray
    length: np.ndarray
    midpoint: np.ndarray
    edge_id: np.ndarray
    edges: np.ndarray
    edge_cells: np.ndarray
    edge_half: np.ndarray

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def interior(self) -> np.ndarray:
        """Ids of edges shared by two cells."""
        return np.flatnonzero(self.edge_cells[:, 1] != BOUNDARY)

    @property
    def num_interior(self) -> int:
        return len(self.interior)

    @property
    def num_boundary(self) -> int:
        return self.num_edges - self.num_interior

    def half_edge(self, cell: int, local_edge: int) -> int:
        size = self.mesh.cell_sizes[cell]
        if not 0 <= local_edge < size:
            raise IndexError(f"cell {cell} has {size} edges, not {local_edge + 1}")
        return int(self.mesh.cell_offsets[cell]) + local_edge

    def record(self, cell: int, local_edge: int) -> EdgeRecord:
        h = self.half_edge(cell, local_edge)
        return EdgeRecord(
            int(self.neighbor[h]),
            (float(self.normal[h, 0]), float(self.normal[h, 1])),
            float(self.length[h]),
            (float(self.midpoint[h, 0]), float(self.midpoint[h, 1])),
        )


def _next_in_cell(offsets: np.ndarray) -> np.ndarray:
    nxt = np.arange(1, offsets[-1] + 1)
    nxt[offsets[1:] - 1] = offsets[:-1]
    return nxt


def _signed_areas(vertices, offsets, cell_vertices) -> np.ndarray:
    if len(offsets) == 1:
        return np.zeros(0)
    nxt = _next_in_cell(offsets)
    p = vertices[cell_vertices]
    q = vertices[cell_vertices[nxt]]
    cross = p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]
    return 0.5 * np.add.reduceat(cross, offsets[:-1])


def _to_csr(cells) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(cells, np.ndarray) and cells.ndim == 2:
        n, k = cells.shape
        return np.arange(n + 1, dtype=np.int64) * k, cells.astype(np.int64).ravel()
    sizes = [len(c) for c in cells]
    offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    flat = np.fromiter((v for c in cells for v in c), dtype=np.int64, count=offsets[-1])
    return offsets, flat


def make_mesh(vertices, cells: Sequence[Sequence[int]] | np.ndarray) -> Mesh:
    """Validate raw vertices and cells, normalize cells to CCW, return a Mesh.

    ``cells`` is a sequence of vertex-index sequences, or an ``(n, k)``
    integer array for meshes whose cells all have ``k`` vertices.
    """
    vertices = np.array(vertices, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(vertices)):
        bad = int(np.flatnonzero(~np.isfinite(vertices).all(axis=1))[0])
        raise MeshError(f"vertex {bad} has a non-finite coordinate")
    offsets, flat = _to_csr(cells)
    sizes = np.diff(offsets)
    nv = len(vertices)

    if np.any(sizes < 3):
        c = int(np.flatnonzero(sizes < 3)[0])
        raise MeshError(f"cell {c} has {sizes[c]} vertices, need at least 3")
    if flat.size and (flat.min() < 0 or flat.max() >= nv):
        h = int(np.flatnonzero((flat < 0) | (flat >= nv))[0])
        c = int(np.searchsorted(offsets, h, side="right") - 1)
        raise MeshError(
            f"cell {c} references vertex {flat[h]} but there are {nv} vertices"
        )
    cell_of = np.repeat(np.arange(len(sizes)), sizes)
    pairs = np.unique(cell_of * max(nv, 1) + flat, return_counts=True)
    if np.any(pairs[1] > 1):
        c = int(pairs[0][np.flatnonzero(pairs[1] > 1)[0]] // max(nv, 1))
        raise MeshError(f"cell {c} repeats a vertex")

    extent = vertices.max(axis=0) - vertices.min(axis=0) if nv else np.zeros(2)
    scale = float(extent.max())
    areas = _signed_areas(vertices, offsets, flat)
    min_area = DEGENERACY_FACTOR * scale**2
    degenerate = np.abs(areas) < min_area
    if scale == 0.0:
        degenerate = np.abs(areas) <= 0.0
    if np.any(degenerate):
        c = int(np.flatnonzero(degenerate)[0])
        raise MeshError(f"cell {c} is degenerate (area {abs(areas[c]):.3g})")

    flip = areas < 0
    if np.any(flip):
        local = np.arange(len(flat)) - offsets[cell_of]
        size = sizes[cell_of]
        # reverse in place but keep each cell's first vertex first
        src = np.where(flip[cell_of], offsets[cell_of] + (size - local) % size, np.arange(len(flat)))
        flat = flat[src]

    mesh = Mesh(vertices, offsets, flat)
    mesh.__dict__["areas"] = np.abs(areas)
    mesh.__dict__["bbox_scale"] = scale
    _check_convex(mesh)
    _check_conforming(mesh)
    return mesh


def _check_convex(mesh: Mesh) -> None:
    if mesh.is_triangular:
        return
    v = mesh.vertices
    cv = mesh.cell_vertices
    nxt = mesh.next_half_edge
    d = v[cv[nxt]] - v[cv]
    dn = d[nxt]
    turn = d[:, 0] * dn[:, 1] - d[:, 1] * dn[:, 0]
    bad = turn <= DEGENERACY_FACTOR * mesh.bbox_scale**2
    if np.any(bad):
        c = int(mesh.cell_of[np.flatnonzero(bad)[0]])
        raise MeshError(f"cell {c} is not strictly convex")


def _edge_map(mesh: Mesh):
    """Group half-edges by undirected edge; reject non-conforming edges."""
    nv = max(mesh.num_vertices, 1)
    a = mesh.cell_vertices
    b = a[mesh.next_half_edge]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    keys, inverse, counts = np.unique(lo * nv + hi, return_inverse=True, return_counts=True)
    if np.any(counts > 2):
        k = keys[np.flatnonzero(counts > 2)[0]]
        raise MeshError(f"edge ({k // nv}, {k % nv}) is shared by more than 2 cells")
    edges = np.stack([keys // nv, keys % nv], axis=1)
    by_edge = np.argsort(inverse, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    first = by_edge[starts]
    second = np.full(len(keys), BOUNDARY, dtype=np.int64)
    paired = counts == 2
    second[paired] = by_edge[starts[paired] + 1]
    if np.any(a[first[paired]] != b[second[paired]]):
        e = int(np.flatnonzero(paired)[np.flatnonzero(a[first[paired]] != b[second[paired]])[0]])
        raise MeshError(
            f"edge ({edges[e, 0]}, {edges[e, 1]}) is traversed in the same direction "
            "by both incident cells (overlapping cells)"
        )
    return edges, inverse, first, second


def _check_conforming(mesh: Mesh) -> None:
    edges, _, first, second = _edge_map(mesh)
    boundary = second == BOUNDARY
    if not np.any(boundary):
        return
    bedges = edges[boundary]
    ids = np.unique(bedges)
    pts = mesh.vertices[ids]
    a = mesh.vertices[bedges[:, 0]]
    b = mesh.vertices[bedges[:, 1]]
    d = b - a
    length = np.hypot(d[:, 0], d[:, 1])
    eps = ON_EDGE_FACTOR * mesh.bbox_scale
    tree = cKDTree(pts)
    hits = tree.query_ball_point(0.5 * (a + b), 0.5 * length + eps)
    for e, cand in enumerate(hits):
        if len(cand) <= 2:
            continue
        for j in cand:
            vid = ids[j]
            if vid == bedges[e, 0] or vid == bedges[e, 1]:
                continue
            w = pts[j] - a[e]
            t = (w @ d[e]) / length[e] ** 2
            dist = abs(d[e, 0] * w[1] - d[e, 1] * w[0]) / length[e]
            if dist <= eps and 0.0 < t < 1.0:
                raise MeshError(
                    f"hanging node: vertex {vid} lies on edge "
                    f"({bedges[e, 0]}, {bedges[e, 1]})"
                )


def build_adjacency(mesh: Mesh) -> EdgeAdjacency:
    """Neighbors, outward unit normals, lengths and midpoints for every half-edge."""
    edges, edge_id, first, second = _edge_map(mesh)
    h = len(mesh.cell_vertices)
    twin = np.full(h, BOUNDARY, dtype=np.int64)
    paired = second != BOUNDARY
    twin[first[paired]] = second[paired]
    twin[second[paired]] = first[paired]
    neighbor = np.where(twin >= 0, mesh.cell_of[np.maximum(twin, 0)], BOUNDARY)

    p = mesh.vertices[mesh.cell_vertices]
    q = mesh.vertices[mesh.cell_vertices[mesh.next_half_edge]]
    d = q - p
    length = np.hypot(d[:, 0], d[:, 1])
    # CCW cells: the edge direction rotated by -90 degrees points outward
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]

    edge_cells = np.stack([mesh.cell_of[first], np.full(len(edges), BOUNDARY)], axis=1)
    edge_cells[paired, 1] = mesh.cell_of[second[paired]]
    return EdgeAdjacency(
        mesh=mesh,
        neighbor=neighbor,
        twin=twin,
        normal=normal,
        length=length,
        midpoint=0.5 * (p + q),
        edge_id=edge_id,
        edges=edges,
        edge_cells=edge_cells,
        edge_half=np.stack([first, second], axis=1),
    )


def outward_normal(mesh: Mesh, cell: int, local_edge: int) -> np.ndarray:
    """Outward unit normal of edge ``local_edge`` of ``cell``.

    Local edge ``k`` runs from the cell's ``k``-th vertex to the next one.
    The inward normal is the negation.
    """
    verts = mesh.cell(cell)
    if not 0 <= local_edge < len(verts):
        raise IndexError(f"cell {cell} has {len(verts)} edges")
    p = mesh.vertices[verts[local_edge]]
    q = mesh.vertices[verts[(local_edge + 1) % len(verts)]]
    d = q - p
    return np.array([d[1], -d[0]]) / np.hypot(d[0], d[1])


def cell_area(mesh: Mesh, cell: int) -> float:
    return float(mesh.areas[cell])


def parse_mesh(text: str) -> Mesh:
    """Parse the ASCII mesh format.

    ::

        vertices <Nv>
        <x> <y>            (Nv lines)
        cells <Nc>
        <k> <i0> ... <ik-1>  (Nc lines)

    ``#`` starts a comment. Blank lines are ignored.
    """
    lines = _content_lines(text)

    def header(expected: str) -> tuple[int, int]:
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise MeshSyntaxError(f"unexpected end of input, expected '{expected} <n>'") from None
        if len(tokens) != 2 or tokens[0] != expected:
            raise MeshSyntaxError(f"expected '{expected} <n>'", lineno)
        try:
            n = int(tokens[1])
        except ValueError:
            raise MeshSyntaxError(f"bad count {tokens[1]!r}", lineno) from None
        if n < 0:
            raise MeshSyntaxError(f"negative count {n}", lineno)
        return lineno, n

    def body(n: int, what: str):
        for _ in range(n):
            try:
                yield next(lines)
            except StopIteration:
                raise MeshSyntaxError(f"unexpected end of input while reading {what}") from None

    _, nv = header("vertices")
    vertices = np.empty((nv, 2))
    for i, (lineno, tokens) in enumerate(body(nv, "vertices")):
        if len(tokens) != 2:
            raise MeshSyntaxError(f"expected 2 coordinates, got {len(tokens)}", lineno)
        try:
            vertices[i] = float(tokens[0]), float(tokens[1])
        except ValueError:
            raise MeshSyntaxError(f"bad coordinate in {' '.join(tokens)!r}", lineno) from None
        if not np.all(np.isfinite(vertices[i])):
            raise MeshSyntaxError("non-finite coordinate", lineno)

    _, nc = header("cells")
    cells = []
    for lineno, tokens in body(nc, "cells"):
        try:
            ints = [int(t) for t in tokens]
        except ValueError:
            raise MeshSyntaxError(f"bad cell record {' '.join(tokens)!r}", lineno) from None
        if not ints or ints[0] < 3:
            raise MeshSyntaxError("cell needs a vertex count of at least 3", lineno)
        if len(ints) != ints[0] + 1:
            raise MeshSyntaxError(
                f"cell declares {ints[0]} vertices but lists {len(ints) - 1}", lineno
            )
        if any(v < 0 or v >= nv for v in ints[1:]):
            bad = next(v for v in ints[1:] if v < 0 or v >= nv)
            raise MeshError(f"vertex index {bad} out of range (have {nv} vertices)", lineno)
        cells.append(ints[1:])

    extra = next(lines, None)
    if extra is not None:
        raise MeshSyntaxError("trailing content after cells", extra[0])
    return make_mesh(vertices, cells)


def _content_lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split("#", 1)[0].split()
        if tokens:
            yield lineno, tokens


def serialize_mesh(mesh: Mesh) -> str:
    out = [f"vertices {mesh.num_vertices}"]
    out.extend(f"{x:.17g} {y:.17g}" for x, y in mesh.vertices.tolist())
    out.append(f"cells {mesh.num_cells}")
    flat = mesh.cell_vertices.tolist()
    offsets = mesh.cell_offsets.tolist()
    for lo, hi in zip(offsets[:-1], offsets[1:]):
        out.append(" ".join(map(str, [hi - lo, *flat[lo:hi]])))
    return "\n".join(out) + "\n"


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        return parse_mesh(fh.read())


def write_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_mesh(mesh))
