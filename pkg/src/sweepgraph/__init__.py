"""Sweep orderings for direction-dependent transport on 2D unstructured meshes."""

from .depgraph import (
    CycleAudit,
    CycleFound,
    DependencyGraph,
    Direction,
    LevelSchedule,
    NotACycle,
    SweepOrder,
    audit_cycle,
    build_graph,
    edge_dependency,
    find_cycle,
    level_schedule,
    rotate,
    topo_sort,
)
from .mesh import (
    BOUNDARY,
    EdgeAdjacency,
    Mesh,
    MeshError,
    build_adjacency,
    cell_area,
    make_mesh,
    outward_normal,
    parse_mesh,
    serialize_mesh,
)
from .meshgen import (
    JitterSpec,
    PinwheelHit,
    PinwheelSpec,
    jitter,
    jittered_triangulation,
    pinwheel_quads,
    scan_pinwheels,
    structured_triangulation,
)
from .sweep import (
    FluxField,
    TransportProblem,
    analytic_attenuation,
    solve_quadrature,
    sweep_levels,
    sweep_solve,
)
