"""Direction-induced dependency graphs, sweep orders, wavefront levels and cycle audits.

Cell ``i`` depends on neighbor ``j`` when the normal on their shared edge
pointing into ``i`` has a positive component along the direction of flow.
Edges whose normal component is within ``tol`` of zero are grazing and
carry no dependency.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from .mesh import BOUNDARY, EdgeAdjacency, Mesh

GRAZING_TOL = 1e-12
ROTATION_TOL = 1e-12


@dataclass(frozen=True)
class Direction:
    """Unit direction of flow; normalized on construction."""

    ox: float
    oy: float

    def __post_init__(self):
        norm = math.hypot(self.ox, self.oy)
        if not math.isfinite(norm) or norm == 0.0:
            raise ValueError(f"direction ({self.ox}, {self.oy}) cannot be normalized")
        object.__setattr__(self, "ox", float(self.ox) / norm)
        object.__setattr__(self, "oy", float(self.oy) / norm)

    @classmethod
    def from_angle(cls, angle: float) -> "Direction":
        return cls(math.cos(angle), math.sin(angle))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.ox, self.oy])

    @property
    def perp(self) -> np.ndarray:
        """Direction rotated by +90 degrees."""
        return np.array([-self.oy, self.ox])

    @property
    def angle(self) -> float:
        return math.atan2(self.oy, self.ox)

    def __neg__(self) -> "Direction":
        return Direction(-self.ox, -self.oy)


class CycleFound(Exception):
    """The dependency graph has a cycle; ``residual`` holds the cells never released."""

    def __init__(self, residual: Sequence[int]):
        self.residual = [int(c) for c in residual]
        super().__init__(f"dependency cycle among {len(self.residual)} cells")


class NotACycle(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DependencyGraph:
    """Directed graph over cells.

    ``edges`` rows are ``(upwind, downwind, mesh edge id)``; the edge id is
    ``-1`` for graphs built by hand with :meth:`from_pairs`.
    """

    num_cells: int
    edges: np.ndarray
    direction: Direction | None = None
    grazing_edges: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @classmethod
    def from_pairs(cls, num_cells: int, pairs) -> "DependencyGraph":
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        ids = np.full((len(pairs), 1), -1, dtype=np.int64)
        return cls(num_cells, np.hstack([pairs, ids]))

    @property
    def upwind(self) -> np.ndarray:
        return self.edges[:, 0]

    @property
    def downwind(self) -> np.ndarray:
        return self.edges[:, 1]

    @cached_property
    def in_degree(self) -> np.ndarray:
        return np.bincount(self.downwind, minlength=self.num_cells)

    @cached_property
    def successors(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, targets)``; targets ascending within each row."""
        order = np.lexsort((self.downwind, self.upwind))
        counts = np.bincount(self.upwind, minlength=self.num_cells)
        indptr = np.zeros(self.num_cells + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, self.downwind[order]

    @cached_property
    def predecessors(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.lexsort((self.upwind, self.downwind))
        counts = np.bincount(self.downwind, minlength=self.num_cells)
        indptr = np.zeros(self.num_cells + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, self.upwind[order]

    def pairs(self) -> list[list[int]]:
        return self.edges[:, :2].tolist()

    def to_json(self) -> dict:
        return {
            "num_cells": self.num_cells,
            "edges": self.pairs(),
            "grazing_edges": self.grazing_edges.tolist(),
        }


@dataclass(frozen=True, eq=False)
class SweepOrder:
    order: np.ndarray

    def __len__(self) -> int:
        return len(self.order)

    def positions(self) -> np.ndarray:
        pos = np.empty(len(self.order), dtype=np.int64)
        pos[self.order] = np.arange(len(self.order))
        return pos

    def respects(self, graph: DependencyGraph) -> bool:
        if len(self.order) != graph.num_cells:
            return False
        if not np.array_equal(np.sort(self.order), np.arange(graph.num_cells)):
            return False
        pos = self.positions()
        return bool(np.all(pos[graph.upwind] < pos[graph.downwind]))

    def to_json(self) -> dict:
        return {"order": self.order.tolist()}


@dataclass(frozen=True, eq=False)
class LevelSchedule:
    levels: list[np.ndarray]

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def max_width(self) -> int:
        return max((len(lv) for lv in self.levels), default=0)

    def level_of(self, num_cells: int) -> np.ndarray:
        out = np.full(num_cells, -1, dtype=np.int64)
        for k, cells in enumerate(self.levels):
            out[cells] = k
        return out

    def flatten(self) -> SweepOrder:
        """Level-by-level concatenation; a valid sweep order."""
        if not self.levels:
            return SweepOrder(np.zeros(0, dtype=np.int64))
        return SweepOrder(np.concatenate(self.levels))

    def to_json(self) -> dict:
        return {"levels": [lv.tolist() for lv in self.levels]}


@dataclass(frozen=True)
class CycleAudit:
    """Turning-angle bookkeeping along a closed sequence of cells.

    ``normals[j]`` is the normal on the edge crossed by hop ``j`` (from
    ``cycle[j]`` to ``cycle[j+1]``), pointing into the downwind cell.
    ``alphas[j]`` is the signed angle turning ``normals[j]`` onto
    ``normals[j+1]``; ``theta`` is the angle from the direction's
    perpendicular to ``normals[0]``, in ``[0, 2*pi)``. ``orientation`` is
    the sense in which the cell centroids are traversed.
    """

    cycle: list[int]
    normals: np.ndarray
    alphas: np.ndarray
    theta: float
    winding: float
    winding_number: int
    orientation: Literal["counterclockwise", "clockwise"]
    dependency: bool

    def to_json(self) -> dict:
        return {
            "cycle": self.cycle,
            "alphas": self.alphas.tolist(),
            "theta": self.theta,
            "winding": self.winding,
            "winding_number": self.winding_number,
            "orientation": self.orientation,
        }


def edge_dependency(inward_normal, omega: Direction, tol: float = GRAZING_TOL) -> bool:
    """True when the cell owning ``inward_normal`` depends on the neighbor across that edge."""
    return float(inward_normal[0] * omega.ox + inward_normal[1] * omega.oy) > tol


def build_graph(
    mesh: Mesh, adjacency: EdgeAdjacency, omega: Direction, tol: float = GRAZING_TOL
) -> DependencyGraph:
    interior = adjacency.interior
    c0 = adjacency.edge_cells[interior, 0]
    c1 = adjacency.edge_cells[interior, 1]
    # outward normal of c0 is the inward normal of c1
    n = adjacency.normal[adjacency.edge_half[interior, 0]]
    dot = n[:, 0] * omega.ox + n[:, 1] * omega.oy
    forward = dot > tol
    backward = dot < -tol
    up = np.where(forward, c0, c1)
    down = np.where(forward, c1, c0)
    keep = forward | backward
    edges = np.stack([up[keep], down[keep], interior[keep]], axis=1)
    return DependencyGraph(
        num_cells=mesh.num_cells,
        edges=edges,
        direction=omega,
        grazing_edges=interior[~keep],
    )


def topo_sort(graph: DependencyGraph) -> SweepOrder:
    """Kahn's algorithm, always releasing the smallest ready cell id.

    Raises :class:`CycleFound` if some cells can never be released.
    """
    indptr, targets = graph.successors
    indptr = indptr.tolist()
    targets = targets.tolist()
    indeg = graph.in_degree.tolist()
    ready = [c for c, d in enumerate(indeg) if d == 0]
    heapq.heapify(ready)
    order = []
    push, pop, emit = heapq.heappush, heapq.heappop, order.append
    while ready:
        u = pop(ready)
        emit(u)
        for v in targets[indptr[u] : indptr[u + 1]]:
            indeg[v] -= 1
            if indeg[v] == 0:
                push(ready, v)
    if len(order) != graph.num_cells:
        released = np.zeros(graph.num_cells, dtype=bool)
        released[order] = True
        raise CycleFound(np.flatnonzero(~released))
    return SweepOrder(np.array(order, dtype=np.int64))


def _gather(indptr: np.ndarray, targets: np.ndarray, rows: np.ndarray) -> np.ndarray:
    starts = indptr[rows]
    lens = indptr[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=targets.dtype)
    shift = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens)
    return targets[np.arange(total) + shift]


def level_schedule(graph: DependencyGraph) -> LevelSchedule:
    """Wavefront levels: sources at level 0, every other cell one past its deepest predecessor."""
    indptr, targets = graph.successors
    indeg = graph.in_degree.copy()
    frontier = np.flatnonzero(indeg == 0)
    levels = []
    seen = 0
    while frontier.size:
        levels.append(frontier)
        seen += frontier.size
        hit, counts = np.unique(_gather(indptr, targets, frontier), return_counts=True)
        indeg[hit] -= counts
        frontier = hit[indeg[hit] == 0]
    if seen != graph.num_cells:
        raise CycleFound(np.flatnonzero(indeg > 0))
    return LevelSchedule(levels)


def find_cycle(graph: DependencyGraph) -> list[int] | None:
    """One simple directed cycle, or None for a DAG.

    Depth-first search from cells in ascending order, children visited in
    ascending order; the first back edge closes the reported cycle.
    """
    indptr, targets = graph.successors
    indptr = indptr.tolist()
    targets = targets.tolist()
    state = [0] * graph.num_cells  # 0 new, 1 on stack, 2 done
    for root in range(graph.num_cells):
        if state[root]:
            continue
        path = [root]
        cursor = [indptr[root]]
        state[root] = 1
        while path:
            u = path[-1]
            k = cursor[-1]
            if k == indptr[u + 1]:
                state[u] = 2
                path.pop()
                cursor.pop()
                continue
            cursor[-1] = k + 1
            v = targets[k]
            if state[v] == 1:
                return path[path.index(v) :]
            if state[v] == 0:
                state[v] = 1
                path.append(v)
                cursor.append(indptr[v])
    return None


def rotate(v, angle: float) -> np.ndarray:
    """Rotate a 2-vector counterclockwise by ``angle`` radians."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def signed_angle(a, b) -> float:
    """Angle in (-pi, pi] turning ``a`` onto ``b``."""
    return math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])


def shared_half_edge(adjacency: EdgeAdjacency, cell: int, neighbor: int) -> int | None:
    """Half-edge of ``cell`` whose opposite cell is ``neighbor``."""
    mesh = adjacency.mesh
    lo, hi = mesh.cell_offsets[cell], mesh.cell_offsets[cell + 1]
    hits = np.flatnonzero(adjacency.neighbor[lo:hi] == neighbor)
    if hits.size == 0 or neighbor == BOUNDARY:
        return None
    return int(lo + hits[0])


def audit_cycle(
    mesh: Mesh,
    adjacency: EdgeAdjacency,
    cycle: Sequence[int],
    omega: Direction,
    tol: float = GRAZING_TOL,
    require_dependency: bool = True,
) -> CycleAudit:
    """Recompute inward normals and turning angles along a closed cell sequence.

    With ``require_dependency`` every hop must be a dependency edge under
    ``omega``; otherwise any closed chain of edge-adjacent cells is accepted,
    which is how the winding of a geometric loop is measured.
    """
    cycle = [int(c) for c in cycle]
    m = len(cycle)
    if m < 2:
        raise NotACycle("a cycle needs at least two cells")
    normals = np.empty((m, 2))
    for j in range(m):
        u, v = cycle[j], cycle[(j + 1) % m]
        h = shared_half_edge(adjacency, v, u)
        if h is None:
            raise NotACycle(f"cells {u} and {v} share no edge")
        normals[j] = -adjacency.normal[h]
        if require_dependency and not edge_dependency(normals[j], omega, tol):
            raise NotACycle(f"hop {u} -> {v} is not a dependency under the given direction")

    alphas = np.array([signed_angle(normals[j], normals[(j + 1) % m]) for j in range(m)])
    for j in range(m):
        turned = rotate(normals[j], alphas[j])
        if np.max(np.abs(turned - normals[(j + 1) % m])) > ROTATION_TOL:
            raise ArithmeticError(f"rotation identity fails at hop {j}")

    theta = signed_angle(omega.perp, normals[0]) % (2.0 * math.pi)
    winding = float(alphas.sum())
    c = mesh.centroids[cycle]
    loop_area = 0.5 * float(np.sum(c[:, 0] * np.roll(c[:, 1], -1) - np.roll(c[:, 0], -1) * c[:, 1]))
    return CycleAudit(
        cycle=cycle,
        normals=normals,
        alphas=alphas,
        theta=float(theta),
        winding=winding,
        winding_number=round(winding / (2.0 * math.pi)),
        orientation="counterclockwise" if loop_area >= 0 else "clockwise",
        dependency=require_dependency,
    )


def cell_turn_angles(mesh: Mesh, adjacency: EdgeAdjacency) -> np.ndarray:
    """|angle| from the inward normal of one edge to the outward normal of another.

    One entry per ordered pair of distinct edges of the same cell. These are
    the per-cell turns a chain of crossed edges can make.
    """
    sizes = mesh.cell_sizes
    out = []
    for k in np.unique(sizes):
        cells = np.flatnonzero(sizes == k)
        h = mesh.cell_offsets[cells][:, None] + np.arange(k)
        n = adjacency.normal[h]
        a, b = np.nonzero(~np.eye(k, dtype=bool))
        inward = -n[:, a]
        outward = n[:, b]
        cross = inward[..., 0] * outward[..., 1] - inward[..., 1] * outward[..., 0]
        dot = np.einsum("...i,...i->...", inward, outward)
        out.append(np.abs(np.arctan2(cross, dot)).ravel())
    return np.concatenate(out) if out else np.zeros(0)
