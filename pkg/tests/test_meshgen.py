import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sweepgraph import (
    Direction,
    JitterSpec,
    PinwheelSpec,
    build_adjacency,
    build_graph,
    find_cycle,
    jitter,
    parse_mesh,
    pinwheel_quads,
    serialize_mesh,
    structured_triangulation,
    topo_sort,
)
from sweepgraph.depgraph import audit_cycle
from sweepgraph.meshgen import boundary_vertices


def test_structured_counts():
    assert structured_triangulation(1, 1).num_cells == 2
    mesh = structured_triangulation(10, 10)
    assert (mesh.num_cells, mesh.num_vertices) == (200, 121)


@pytest.mark.parametrize("pattern", ["uniform", "alternating", "random"])
@pytest.mark.parametrize("nx, ny", [(1, 1), (3, 2), (5, 7)])
def test_structured_is_valid(nx, ny, pattern):
    mesh = structured_triangulation(nx, ny, pattern, seed=7)
    # revalidate through the file format
    again = parse_mesh(serialize_mesh(mesh))
    assert again.num_cells == 2 * nx * ny
    assert again.num_vertices == (nx + 1) * (ny + 1)


def test_random_diagonals_differ_by_seed():
    a = structured_triangulation(6, 6, "random", seed=1)
    b = structured_triangulation(6, 6, "random", seed=2)
    assert not a.same_as(b)
    assert a.same_as(structured_triangulation(6, 6, "random", seed=1))


def test_structured_rejects_bad_input():
    with pytest.raises(ValueError):
        structured_triangulation(0, 3)
    with pytest.raises(ValueError):
        structured_triangulation(2, 2, "random")


def test_jitter_zero_is_identity():
    mesh = structured_triangulation(5, 5)
    assert jitter(mesh, JitterSpec(0.0, 3)).same_as(mesh)


def test_jitter_keeps_areas_positive():
    mesh = jitter(structured_triangulation(10, 10), JitterSpec(0.3, 42))
    assert np.all(mesh.areas > 0)
    parse_mesh(serialize_mesh(mesh))


def test_jitter_deterministic():
    base = structured_triangulation(10, 10, "random", seed=5)
    a = jitter(base, JitterSpec(0.3, 42))
    b = jitter(base, JitterSpec(0.3, 42))
    assert serialize_mesh(a) == serialize_mesh(b)


@given(st.integers(2, 9), st.floats(0.01, 0.49), st.integers(0, 2**32 - 1))
def test_jitter_moves_only_interior_within_bound(n, amplitude, seed):
    base = structured_triangulation(n, n, "random", seed=seed)
    moved = jitter(base, JitterSpec(amplitude, seed))
    fixed = boundary_vertices(base)
    assert np.array_equal(moved.vertices[fixed], base.vertices[fixed])
    assert np.array_equal(moved.cell_vertices, base.cell_vertices)
    # a move is bounded by a*h, with h at most the grid spacing plus an earlier
    # neighbor move, hence every shift is at most a / (n (1 - a))
    shift = np.hypot(*(moved.vertices - base.vertices).T)
    assert np.all(shift <= amplitude / (n * (1 - amplitude)) * (1 + 1e-12))


def test_jitter_spec_bounds():
    with pytest.raises(ValueError):
        JitterSpec(0.5)
    with pytest.raises(ValueError):
        jitter(pinwheel_quads(PinwheelSpec(4)), JitterSpec(0.1))


def test_pinwheel_counts():
    mesh = pinwheel_quads(PinwheelSpec(4, 1.0, 2.0, 0.0))
    adj = build_adjacency(mesh)
    assert mesh.num_cells == 4
    assert (adj.num_interior, adj.num_boundary) == (4, 8)


def test_pinwheel_untilted_acyclic():
    mesh = pinwheel_quads(PinwheelSpec(4, 1.0, 2.0, 0.0))
    graph = build_graph(mesh, build_adjacency(mesh), Direction(1, 0))
    assert find_cycle(graph) is None
    assert len(topo_sort(graph)) == 4


@given(st.integers(3, 12), st.floats(0.0, 1.5), st.floats(1.05, 5.0))
def test_pinwheel_structure(n, slant, ratio):
    try:
        mesh = pinwheel_quads(PinwheelSpec(n, 1.0, ratio, slant))
    except ValueError:
        return
    assert mesh.num_cells == n
    assert np.all(mesh.cell_sizes == 4)
    # no cell covers the origin: some edge of each cell has it strictly outside
    for c in range(n):
        pts = mesh.vertices[list(mesh.cell(c))]
        edges = np.roll(pts, -1, axis=0) - pts
        to_origin = -pts
        assert not np.all(edges[:, 0] * to_origin[:, 1] - edges[:, 1] * to_origin[:, 0] > 0)


def test_pinwheel_rejects_nonconvex():
    with pytest.raises(ValueError, match="convex"):
        pinwheel_quads(PinwheelSpec(6, 1.0, 2.0, 0.8))


@given(st.integers(3, 12), st.floats(-1.5, 1.5), st.floats(1.05, 8.0))
def test_pinwheel_ring_normals_wind_once(n, slant, ratio):
    """The crossed spokes of a symmetric ring turn through exactly one full turn.

    A dependency cycle would need every crossed normal in one open half-plane,
    i.e. total turning zero, so these rings are acyclic for every direction.
    """
    try:
        mesh = pinwheel_quads(PinwheelSpec(n, 1.0, ratio, slant))
    except ValueError:
        return
    adj = build_adjacency(mesh)
    audit = audit_cycle(mesh, adj, list(range(n)), Direction(1, 0), require_dependency=False)
    assert audit.winding == pytest.approx(2 * math.pi, abs=1e-9)
    for k in range(16):
        graph = build_graph(mesh, adj, Direction.from_angle(2 * math.pi * k / 16 + 0.01))
        assert find_cycle(graph) is None
