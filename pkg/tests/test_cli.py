import csv
import json

import numpy as np
import pytest

from annealtopt import build_benchmark
from annealtopt.cli import main
from annealtopt.output import (
    read_truss_design,
    read_vtk_cell_rho,
    write_truss_design,
    write_vtk,
)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_truss6_exhaustive(tmp_path):
    out = tmp_path / "r1"
    code = main(["run", "--problem", "benchmark:truss6", "--solver", "exhaustive",
                 "--seed", "1", "--out", str(out)])
    assert code == 0
    rows = read_csv(out / "convergence.csv")
    assert rows[0] == ["iter", "objective", "volume_ratio", "energy",
                       "solver_time_s", "n_cap", "n_floor"]
    summary = json.loads((out / "summary.json").read_text())
    assert len(rows) - 1 == summary["iterations"]
    assert summary["n_qubits"] == 7
    assert summary["converged"] is True
    # snapshots every iteration for small problems, plus the final one
    assert (out / "topology_iter0000.txt").exists()
    assert (out / "topology_final.txt").exists()


def test_run_unknown_solver_exits_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["run", "--problem", "benchmark:truss6", "--solver", "warp",
              "--out", str(tmp_path / "x")])
    assert err.value.code == 2


def test_run_requires_lambda_for_files(tmp_path):
    problem_file = tmp_path / "bar.json"
    problem_file.write_text(json.dumps({
        "kind": "truss",
        "material": {"E": 2e11, "nu": 0.3},
        "truss": {"nodes": [[0, 0], [1, 0]], "members": [[0, 1, 0.5]]},
        "supports": [[0, 0], [0, 1], [1, 1]],
        "loads": [[1, [1000, 0]]],
        "v_target": 1.0,
    }))
    code = main(["run", "--problem", str(problem_file), "--solver", "exhaustive",
                 "--out", str(tmp_path / "out")])
    assert code == 2
    code = main(["run", "--problem", str(problem_file), "--solver", "exhaustive",
                 "--lambda", "5", "--out", str(tmp_path / "out")])
    assert code == 0


def test_oc_missing_v_target_exits_2(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["oc", "--problem", "benchmark:truss6", "--out", str(tmp_path / "x")])
    assert err.value.code == 2


def test_oc_bundle(tmp_path):
    out = tmp_path / "oc1"
    code = main(["oc", "--problem", "benchmark:truss6", "--v-target", "0.35",
                 "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["method"] == "oc"
    assert (out / "convergence.csv").exists()


def test_export_qubo_counts(tmp_path):
    for name, expected in [("truss6", 7), ("truss21", 22)]:
        out = tmp_path / f"{name}.qubo.json"
        code = main(["export-qubo", "--problem", f"benchmark:{name}",
                     "--iteration", "0", "--out", str(out)])
        assert code == 0
        raw = json.loads(out.read_text())
        assert raw["n"] == expected


def test_export_qubo_malformed_problem(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main(["export-qubo", "--problem", str(bad),
                 "--out", str(tmp_path / "q.json")])
    assert code == 2


def test_run_malformed_problem_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "truss"}')
    code = main(["run", "--problem", str(bad), "--lambda", "5",
                 "--out", str(tmp_path / "out")])
    assert code == 2


def test_bench_unknown_suite(tmp_path):
    code = main(["bench", "--suite", "everything", "--out", str(tmp_path / "b")])
    assert code == 2


def test_bench_truss_suite(tmp_path):
    out = tmp_path / "bench"
    code = main(["bench", "--suite", "truss", "--seeds", "1",
                 "--max-iters", "8", "--out", str(out)])
    assert code == 0
    table = (out / "bench_summary.txt").read_text()
    for name in ("truss6", "truss21", "truss29"):
        assert name in table
    assert "oc" in table and "sa" in table


def test_same_seed_reproduces_convergence_log(tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        code = main(["run", "--problem", "benchmark:truss21", "--solver", "sa",
                     "--seed", "7", "--out", str(out)])
        assert code == 0
        outs.append((out / "convergence.csv").read_text())
    # identical apart from the measured solver wall time column
    rows_a = [r.split(",") for r in outs[0].splitlines()]
    rows_b = [r.split(",") for r in outs[1].splitlines()]
    assert len(rows_a) == len(rows_b)
    time_col = rows_a[0].index("solver_time_s")
    for ra, rb in zip(rows_a, rows_b):
        ra[time_col] = rb[time_col] = "-"
        assert ra == rb


def test_truss_topology_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    rho = rng.uniform(1e-6, 1.0, 29)
    path = tmp_path / "design.txt"
    write_truss_design(path, rho)
    again = read_truss_design(path)
    np.testing.assert_array_equal(again, rho)


def test_vtk_topology_round_trip(tmp_path):
    problem = build_benchmark("coat_hanger")
    rng = np.random.default_rng(5)
    rho = rng.uniform(1e-6, 1.0, problem.n_elem)
    path = tmp_path / "design.vtk"
    write_vtk(path, problem, rho)
    again = read_vtk_cell_rho(path)
    np.testing.assert_array_equal(again, rho)


def test_vtk_file_structure(tmp_path):
    problem = build_benchmark("coat_hanger")
    path = tmp_path / "design.vtk"
    write_vtk(path, problem, np.full(50, 0.5))
    text = path.read_text().splitlines()
    assert text[0].startswith("# vtk DataFile")
    assert "ASCII" in text[2]
    assert "DATASET UNSTRUCTURED_GRID" in text[3]
    assert any(line.startswith("CELL_DATA 50") for line in text)
    assert any(line.startswith("SCALARS rho double") for line in text)
    # 2D quads are VTK cell type 9
    idx = next(i for i, line in enumerate(text) if line.startswith("CELL_TYPES"))
    assert text[idx + 1] == "9"


def test_vtk_3d_uses_hexahedra(tmp_path):
    problem = build_benchmark("lshape_40x40x5")
    path = tmp_path / "lshape.vtk"
    write_vtk(path, problem, np.full(problem.n_elem, 0.25))
    text = path.read_text().splitlines()
    idx = next(i for i, line in enumerate(text) if line.startswith("CELL_TYPES"))
    assert text[idx + 1] == "12"
    assert f"CELL_DATA {problem.n_elem}" in text


def test_grid_run_writes_vtk_snapshots(tmp_path):
    out = tmp_path / "coat"
    code = main(["run", "--problem", "benchmark:coat_hanger", "--solver", "sa",
                 "--seed", "0", "--max-iters", "12", "--out", str(out)])
    assert code == 0
    assert (out / "topology_final.vtk").exists()
    assert (out / "topology_iter0000.vtk").exists()


def test_run_with_remote_solver(tmp_path):
    import threading
    from http.server import HTTPServer

    from tests.test_solvers import _StubHandler

    _StubHandler.mode = "exact"
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    endpoint = f"http://127.0.0.1:{server.server_address[1]}/"
    out = tmp_path / "remote"
    code = main(["run", "--problem", "benchmark:truss6", "--solver", "remote",
                 "--endpoint", endpoint, "--out", str(out)])
    server.shutdown()
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["method"] == "remote"
    assert summary["converged"] is True


def test_run_remote_unreachable_exits_3(tmp_path):
    code = main(["run", "--problem", "benchmark:truss6", "--solver", "remote",
                 "--endpoint", "http://127.0.0.1:9/", "--out",
                 str(tmp_path / "x")])
    assert code == 3
