"""Run artifacts: convergence log, topology snapshots, run summary.

All files are plain text.  Floats are written with ``repr`` (shortest
round-trip form), so reloading a topology file reproduces the stored
design bit for bit and two runs with the same seed write identical logs
(the solver-time column is the one wall-clock quantity in the log).
"""

import csv
import json
import os

import numpy as np

CSV_COLUMNS = ("iter", "objective", "volume_ratio", "energy",
               "solver_time_s", "n_cap", "n_floor")

#: Snapshot every iteration for small problems, every Nth above.
SNAPSHOT_SMALL_LIMIT = 100
SNAPSHOT_STRIDE = 5

_VTK_CELL_TYPES = {2: 9, 3: 12}  # VTK_QUAD, VTK_HEXAHEDRON


def snapshot_stride(n_elem):
    return 1 if n_elem <= SNAPSHOT_SMALL_LIMIT else SNAPSHOT_STRIDE


def write_convergence_csv(path, history):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in history:
            writer.writerow([
                rec.iteration,
                repr(float(rec.objective)),
                repr(float(rec.volume_ratio)),
                repr(float(rec.energy)),
                repr(float(rec.solver_time_s)),
                rec.n_cap,
                rec.n_floor,
            ])


def write_truss_design(path, rho):
    """Member design variables, one ``index value`` line per member."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# member rho\n")
        for e, value in enumerate(rho):
            fh.write(f"{e} {float(value)!r}\n")


def read_truss_design(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            idx, val = line.split()
            values[int(idx)] = float(val)
    return np.array([values[e] for e in sorted(values)])


def write_vtk(path, problem, rho, title="topology snapshot"):
    """Legacy ASCII unstructured-grid file with one ``rho`` value per
    active cell (quad cells in 2D, hexahedra in 3D)."""
    mesh = problem.geometry
    coords = mesh.node_coords()
    cells = [mesh.cell_nodes(ijk) for ijk in mesh.active_cells()]
    if len(cells) != len(rho):
        raise ValueError("rho length does not match the active cell count")
    nodes_per_cell = len(cells[0])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(coords)} double\n")
        for p in coords:
            x, y = float(p[0]), float(p[1])
            z = float(p[2]) if len(p) == 3 else 0.0
            fh.write(f"{x!r} {y!r} {z!r}\n")
        fh.write(f"CELLS {len(cells)} {len(cells) * (nodes_per_cell + 1)}\n")
        for cell in cells:
            fh.write(f"{nodes_per_cell} " + " ".join(str(n) for n in cell) + "\n")
        fh.write(f"CELL_TYPES {len(cells)}\n")
        cell_type = _VTK_CELL_TYPES[mesh.dim]
        for _ in cells:
            fh.write(f"{cell_type}\n")
        fh.write(f"CELL_DATA {len(cells)}\n")
        fh.write("SCALARS rho double 1\nLOOKUP_TABLE default\n")
        for value in rho:
            fh.write(f"{float(value)!r}\n")


def read_vtk_cell_rho(path):
    """Read back the ``rho`` CELL_DATA scalars from :func:`write_vtk`."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    it = iter(enumerate(lines))
    count = None
    for i, line in it:
        if line.startswith("CELL_DATA"):
            count = int(line.split()[1])
        if line.startswith("SCALARS rho"):
            start = i + 2  # skip the LOOKUP_TABLE line
            values = [float(v) for v in lines[start:start + count]]
            break
    return np.asarray(values)


class BundleWriter:
    """Streams snapshots during a run and finalizes the bundle."""

    def __init__(self, out_dir, problem):
        self.out_dir = out_dir
        self.problem = problem
        self.stride = snapshot_stride(problem.n_elem)
        os.makedirs(out_dir, exist_ok=True)

    def _snapshot_path(self, tag):
        ext = "txt" if self.problem.kind == "truss" else "vtk"
        return os.path.join(self.out_dir, f"topology_{tag}.{ext}")

    def write_snapshot(self, tag, rho):
        path = self._snapshot_path(tag)
        if self.problem.kind == "truss":
            write_truss_design(path, rho)
        else:
            write_vtk(path, self.problem, rho)

    def on_iteration(self, record, state):
        if record.iteration % self.stride == 0:
            self.write_snapshot(f"iter{record.iteration:04d}", state.rho)

    def finalize(self, result, summary):
        write_convergence_csv(os.path.join(self.out_dir, "convergence.csv"),
                              result.history)
        self.write_snapshot("final", result.final_rho)
        with open(os.path.join(self.out_dir, "summary.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(summary, fh, indent=1)
            fh.write("\n")


def run_summary(problem, result, extra=None):
    """Summary dictionary mirroring the RunResult values exactly."""
    summary = {
        "method": result.method,
        "n_elem": problem.n_elem,
        "n_qubits": result.n_qubits,
        "iterations": result.iterations,
        "converged": result.converged,
        "final_objective": result.final_objective,
        "final_volume_ratio": result.final_volume_ratio,
        "tfs_s": result.tfs_s,
        "v_target": problem.v_target,
    }
    if extra:
        summary.update(extra)
    return summary
