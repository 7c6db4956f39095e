import numpy as np
import pytest
from hypothesis import settings

from sweepgraph import build_adjacency, parse_mesh, structured_triangulation

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SQUARE = """\
vertices 4
0 0
1 0
1 1
0 1
cells 2
3 0 1 2
3 0 2 3
"""


@pytest.fixture
def square():
    """T0 = lower-right triangle, T1 = upper-left, diagonal (0,0)-(1,1)."""
    return parse_mesh(SQUARE)


@pytest.fixture
def square_adj(square):
    return build_adjacency(square)


@pytest.fixture
def grid4():
    return structured_triangulation(4, 4)


def single_triangle():
    return parse_mesh("vertices 3\n0 0\n1 0\n0 1\ncells 1\n3 0 1 2\n")


def directions(k, offset=0.0):
    angles = 2.0 * np.pi * np.arange(k) / k + offset
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


_acceptance = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_criterion"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        verdict = "PASS" if _acceptance[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
