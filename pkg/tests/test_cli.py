import io
import json
from unittest import mock

import pytest

from sweepgraph import DependencyGraph, serialize_mesh, structured_triangulation
from sweepgraph.cli import run

from .conftest import SQUARE


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def square_file(tmp_path):
    path = tmp_path / "square.mesh"
    path.write_text(SQUARE)
    return str(path)


@pytest.fixture
def grid_file(tmp_path):
    path = tmp_path / "grid.mesh"
    path.write_text(serialize_mesh(structured_triangulation(6, 5, "random", seed=3)))
    return str(path)


def test_order_square(square_file):
    code, out, _ = call("order", "--mesh", square_file, "--omega", "1,0")
    assert code == 0
    assert json.loads(out) == {"order": [1, 0]}


def test_order_unnormalized_and_negative_direction(square_file):
    assert call("order", "--mesh", square_file, "--omega", "5,0")[1] == '{"order":[1,0]}\n'
    assert json.loads(call("order", "--mesh", square_file, "--omega=-1,0")[1]) == {"order": [0, 1]}
    assert json.loads(call("order", "--mesh", square_file, "--angle", "3.14159")[1]) == {
        "order": [0, 1]
    }


def test_order_csv(square_file):
    code, out, _ = call("order", "--mesh", square_file, "--omega", "1,0", "--format", "csv")
    assert code == 0
    assert out == "position,cell_id\n0,1\n1,0\n"


def test_levels(grid_file):
    code, out, _ = call("levels", "--mesh", grid_file, "--omega", "0.3,0.7")
    doc = json.loads(out)
    assert code == 0
    assert sorted(c for lv in doc["levels"] for c in lv) == list(range(60))
    assert doc["num_levels"] == len(doc["levels"])
    assert doc["max_width"] == max(map(len, doc["levels"]))


def test_graph_schema(square_file):
    code, out, _ = call("graph", "--mesh", square_file, "--omega", "1,0")
    assert json.loads(out) == {"num_cells": 2, "edges": [[1, 0]], "grazing_edges": []}


def test_cycles_and_audit_on_acyclic_mesh(grid_file):
    code, out, _ = call("cycles", "--mesh", grid_file, "--omega", "1,1")
    assert code == 0
    assert json.loads(out) == {"cycle": None, "status": "acyclic"}
    code, out, _ = call("audit", "--mesh", grid_file, "--omega", "1,1")
    assert code == 3
    assert json.loads(out)["status"] == "acyclic"


def test_cycle_paths_exit_3(square_file):
    # no valid convex mesh yields a cycle, so substitute the graph
    cyclic = DependencyGraph.from_pairs(2, [(0, 1), (1, 0)])
    with mock.patch("sweepgraph.cli.build_graph", return_value=cyclic):
        code, out, _ = call("cycles", "--mesh", square_file, "--omega", "1,0")
        assert (code, json.loads(out)["cycle"]) == (3, [0, 1])
        code, out, _ = call("order", "--mesh", square_file, "--omega", "1,0")
        assert code == 3
        assert json.loads(out) == {"cycle": [0, 1], "residual": [0, 1]}
        assert call("levels", "--mesh", square_file, "--omega", "1,0")[0] == 3
        assert call("sweep", "--mesh", square_file, "--omega", "1,0")[0] == 3


def test_validate(square_file):
    code, out, _ = call("validate", "--mesh", square_file)
    assert code == 0
    doc = json.loads(out)
    assert doc["valid"] and doc["num_edges"] == 5 and doc["interior_edges"] == 1


def test_validate_hanging_node(tmp_path):
    path = tmp_path / "hanging.mesh"
    path.write_text(
        "vertices 6\n0 0\n2 0\n1 1\n0 -1\n1 0\n2 -1\n"
        "cells 4\n3 0 1 2\n3 0 3 4\n3 4 3 5\n3 4 5 1\n"
    )
    code, out, err = call("validate", "--mesh", str(path))
    assert (code, out) == (2, "")
    doc = json.loads(err)
    assert doc["error"] == "invalid_mesh"
    assert "edge (0, 1)" in doc["message"]
    assert err.count("\n") == 1


def test_validate_syntax_error_reports_line(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("vertices 1\n0 nope\ncells 0\n")
    code, _, err = call("validate", "--mesh", str(path))
    assert code == 2
    assert "line 2" in json.loads(err)["message"]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["order", "--mesh", "x.mesh"],
        ["order", "--mesh", "x.mesh", "--omega", "1,0", "--angle", "1"],
        ["order", "--omega", "1,0"],
        ["frobnicate"],
        ["gen"],
    ],
)
def test_usage_errors_exit_1(argv, square_file):
    argv = [a if a != "x.mesh" else square_file for a in argv]
    code, out, err = call(*argv)
    assert code == 1
    assert out == ""
    assert json.loads(err)["error"] == "usage"


def test_missing_file_exit_1(tmp_path):
    assert call("order", "--mesh", str(tmp_path / "nope"), "--omega", "1,0")[0] == 1


def test_sweep_outputs(grid_file):
    argv = ["sweep", "--mesh", grid_file, "--omega", "0.6,0.8", "--sigma", "2", "--source", "6",
            "--inflow", "3"]
    code, out, _ = call(*argv)
    psi = json.loads(out)["psi"]
    assert code == 0 and len(psi) == 60
    assert max(abs(p - 3.0) for p in psi) <= 1e-13
    csv = call(*argv, "--format", "csv")[1].splitlines()
    assert csv[0] == "cell_id,psi" and len(csv) == 61
    assert call(*argv, "--parallel")[1] == out


def test_gen_structured_and_pinwheel(tmp_path):
    code, out, _ = call("gen", "structured", "--nx", "3", "--ny", "2", "--jitter", "0.3",
                        "--seed", "9", "--pattern", "random")
    assert code == 0 and out.startswith("vertices 12\n")
    path = tmp_path / "ring.mesh"
    code, _, _ = call("gen", "pinwheel", "--n", "5", "--slant", "0.3", "--rin", "1", "--rout", "2",
                      "-o", str(path))
    assert code == 0
    assert call("validate", "--mesh", str(path))[0] == 0
    assert call("cycles", "--mesh", str(path), "--angle", "0.7")[0] == 0


def test_gen_rejects_nonconvex_pinwheel():
    code, _, err = call("gen", "pinwheel", "--n", "6", "--slant", "1.2")
    assert code == 1 and "convex" in json.loads(err)["message"]


def test_output_file(tmp_path, square_file):
    target = tmp_path / "order.json"
    code, out, _ = call("order", "--mesh", square_file, "--omega", "1,0", "-o", str(target))
    assert (code, out) == (0, "")
    assert json.loads(target.read_text()) == {"order": [1, 0]}


def test_bench_small():
    code, out, _ = call("bench", "--nx", "20", "--ny", "10", "--omega", "0.8,0.6", "--repeat", "2")
    doc = json.loads(out)
    assert code == 0
    assert doc["num_cells"] == 400 and doc["sorted_cells"] == 400
    assert set(doc["total_seconds"]) == {"min", "median", "mean"}


def test_text_errors_for_csv_format(square_file):
    code, _, err = call("order", "--mesh", square_file, "--format", "csv")
    assert code == 1
    assert err.startswith("error: ")
