"""Problem definitions: trusses, structured grids, benchmarks, and file I/O.

A :class:`Problem` bundles geometry (a :class:`TrussModel` or a
:class:`GridMesh`), material constants, supports, point loads, and the
target volume fraction.  Problems are immutable after construction and
safe to share between threads.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

BENCHMARK_NAMES = (
    "truss6",
    "truss21",
    "truss29",
    "coat_hanger",
    "cantilever_80x40",
    "cube_20",
    "lshape_40x40x5",
)

#: Recommended run parameters per benchmark (initial density, updater cap,
#: slack cap, penalty weight, repeat samples for reporting).
BENCHMARK_PARAMS = {
    "truss6": dict(rho0=0.35, theta_e=1.1, theta_s=0.02, lam=5.0, repeats=200),
    "truss21": dict(rho0=0.5, theta_e=1.1, theta_s=0.02, lam=5.0, repeats=200),
    "truss29": dict(rho0=0.4, theta_e=1.1, theta_s=0.02, lam=5.0, repeats=250),
    "coat_hanger": dict(rho0=0.6, theta_e=1.05, theta_s=0.02, lam=500.0, repeats=200),
    "cantilever_80x40": dict(rho0=0.6, theta_e=1.1, theta_s=0.02, lam=8e3, repeats=200),
    "cube_20": dict(rho0=0.25, theta_e=1.1, theta_s=0.02, lam=1000.0, repeats=200),
    "lshape_40x40x5": dict(rho0=0.5, theta_e=1.1, theta_s=0.02, lam=1e5, repeats=200),
}


class InvalidProblemError(ValueError):
    """Raised when a problem file cannot be parsed or violates an invariant."""


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic linear-elastic material constants."""

    youngs_modulus: float  # N/m^2
    poisson_ratio: float


@dataclass(frozen=True)
class TrussModel:
    """Pin-jointed bar structure.

    Parameters
    ----------
    nodes : ndarray, shape (n_nodes, 2) or (n_nodes, 3)
        Node coordinates in meters.
    members : ndarray of int, shape (n_members, 2)
        Node index pairs (a, b) per member.
    areas : ndarray, shape (n_members,)
        Initial cross-sectional area of each member, m^2.
    """

    nodes: np.ndarray
    members: np.ndarray
    areas: np.ndarray

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def n_members(self):
        return self.members.shape[0]

    def lengths(self):
        d = self.nodes[self.members[:, 1]] - self.nodes[self.members[:, 0]]
        return np.linalg.norm(d, axis=1)


@dataclass(frozen=True)
class GridMesh:
    """Structured grid of identical rectangular (2D) or box (3D) cells.

    ``active`` is a boolean array of shape ``counts``; inactive cells carry
    no material, loads, or supports (used for L-shaped domains).  Node
    (i, j[, k]) has index ``i + j*(nx+1) [+ k*(nx+1)*(ny+1)]``.
    """

    counts: tuple
    element_size: tuple
    active: np.ndarray

    @property
    def dim(self):
        return len(self.counts)

    @property
    def node_counts(self):
        return tuple(c + 1 for c in self.counts)

    @property
    def n_nodes(self):
        return int(np.prod(self.node_counts))

    def node_index(self, ijk):
        nc = self.node_counts
        idx = ijk[0]
        stride = nc[0]
        for a in range(1, self.dim):
            idx += ijk[a] * stride
            stride *= nc[a]
        return idx

    def node_coords(self):
        """Coordinates of every grid node, shape (n_nodes, dim)."""
        axes = [np.arange(n) * s for n, s in zip(self.node_counts, self.element_size)]
        mesh = np.meshgrid(*axes, indexing="ij")
        # node_index runs fastest along the first axis
        return np.stack([m.ravel(order="F") for m in mesh], axis=1)

    def active_cells(self):
        """Index tuples of active cells in canonical (C-order) enumeration."""
        return np.argwhere(self.active)

    def cell_nodes(self, ijk):
        """Global node indices of one cell's corners (counterclockwise,
        bottom face first in 3D)."""
        i, j = ijk[0], ijk[1]
        if self.dim == 2:
            quad = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            return [self.node_index(c) for c in quad]
        k = ijk[2]
        hexa = [
            (i, j, k), (i + 1, j, k), (i + 1, j + 1, k), (i, j + 1, k),
            (i, j, k + 1), (i + 1, j, k + 1), (i + 1, j + 1, k + 1), (i, j + 1, k + 1),
        ]
        return [self.node_index(c) for c in hexa]


@dataclass(frozen=True)
class LoadCase:
    """Point loads: list of (node index, force vector in N)."""

    point_loads: tuple


@dataclass(frozen=True)
class Supports:
    """Homogeneous supports: set of fixed (node index, axis) pairs."""

    fixed_dofs: frozenset


@dataclass(frozen=True)
class Problem:
    """A complete optimization problem.

    ``kind`` is one of ``truss``, ``plane_strain``, ``solid``.  Volumes are
    derived: ``element_volumes`` holds the full-material volume of every
    element (area times length for bars, cell volume for grid cells) and
    ``initial_volume`` is their sum.
    """

    kind: str
    geometry: object
    material: MaterialParams
    loads: LoadCase
    supports: Supports
    v_target: float

    @property
    def dim(self):
        return self.geometry.dim

    @property
    def n_elem(self):
        if self.kind == "truss":
            return self.geometry.n_members
        return int(np.count_nonzero(self.geometry.active))

    @property
    def n_nodes(self):
        if self.kind == "truss":
            return self.geometry.nodes.shape[0]
        return self.geometry.n_nodes

    @property
    def n_dof(self):
        return self.dim * self.n_nodes

    def element_volumes(self):
        """Full-material volume of each element, m^3 (or m^2 thickness-1
        equivalents in plane strain)."""
        if self.kind == "truss":
            return self.geometry.areas * self.geometry.lengths()
        cell = float(np.prod(self.geometry.element_size))
        return np.full(self.n_elem, cell)

    @property
    def initial_volume(self):
        return float(self.element_volumes().sum())

    def node_coords(self):
        if self.kind == "truss":
            return self.geometry.nodes
        return self.geometry.node_coords()


# ---------------------------------------------------------------------------
# validation

def validate(problem):
    """Check every invariant; returns a list of violation messages.

    An empty list means the problem is valid.  Violations are data, not
    errors: callers that require validity should raise on a nonempty list.
    """
    v = []
    m = problem.material
    if not m.youngs_modulus > 0:
        v.append("material: youngs_modulus must be > 0")
    if not (0 <= m.poisson_ratio < 0.5):
        v.append("material: poisson_ratio must lie in [0, 0.5)")

    if problem.kind == "truss":
        if not isinstance(problem.geometry, TrussModel):
            v.append("kind 'truss' requires truss geometry")
            return v
        g = problem.geometry
        n_nodes = g.nodes.shape[0]
        if np.any(g.members < 0) or np.any(g.members >= n_nodes):
            v.append("members: node index out of range")
        else:
            if np.any(g.lengths() <= 0):
                v.append("members: L_e > 0 violated (zero-length member)")
            seen = set()
            for a, b in g.members:
                key = (min(a, b), max(a, b))
                if key in seen:
                    v.append(f"members: duplicate member {key}")
                seen.add(key)
        if np.any(g.areas <= 0):
            v.append("members: initial area must be > 0")
    elif problem.kind in ("plane_strain", "solid"):
        if not isinstance(problem.geometry, GridMesh):
            v.append(f"kind '{problem.kind}' requires grid geometry")
            return v
        g = problem.geometry
        want = 2 if problem.kind == "plane_strain" else 3
        if g.dim != want:
            v.append(f"kind '{problem.kind}' requires a {want}D grid")
            return v
        if any(c < 1 for c in g.counts):
            v.append("grid: counts must be >= 1 per axis")
            return v
        if any(s <= 0 for s in g.element_size):
            v.append("grid: element size must be > 0 per axis")
        if g.active.shape != tuple(g.counts):
            v.append("grid: active mask shape does not match counts")
            return v
        if not g.active.any():
            v.append("grid: at least one active cell required")
    else:
        v.append(f"unknown kind '{problem.kind}'")
        return v

    n_nodes = problem.n_nodes
    used = _used_nodes(problem)

    if not problem.supports.fixed_dofs:
        v.append("supports: empty support set leaves rigid-body modes")
    else:
        need = 3 if problem.dim == 2 else 6
        if len(problem.supports.fixed_dofs) < need:
            v.append("supports: too few fixed dofs to remove rigid-body modes")
    for node, axis in sorted(problem.supports.fixed_dofs):
        if not (0 <= node < n_nodes):
            v.append(f"supports: unknown node {node}")
        elif node not in used:
            v.append(f"supports: node {node} touches only inactive cells")
        if not (0 <= axis < problem.dim):
            v.append(f"supports: axis {axis} out of range for node {node}")

    for node, force in problem.loads.point_loads:
        if not (0 <= node < n_nodes):
            v.append(f"loads: unknown node {node}")
            continue
        if node not in used:
            v.append(f"loads: node {node} touches only inactive cells")
        force = np.asarray(force, dtype=float)
        if force.shape != (problem.dim,):
            v.append(f"loads: force on node {node} has wrong dimension")
            continue
        for axis in range(problem.dim):
            if force[axis] != 0.0 and (node, axis) in problem.supports.fixed_dofs:
                v.append(f"loads: node {node} is fixed along loaded axis {axis}")

    if not (0 < problem.v_target <= 1):
        v.append("v_target must lie in (0, 1]")
    if isinstance(problem.geometry, (TrussModel, GridMesh)) and not v:
        if problem.initial_volume <= 0:
            v.append("initial volume must be > 0")
    return v


def _used_nodes(problem):
    """Set of node indices attached to at least one (active) element."""
    if problem.kind == "truss":
        return set(int(n) for n in problem.geometry.members.ravel())
    g = problem.geometry
    used = set()
    for ijk in g.active_cells():
        used.update(g.cell_nodes(ijk))
    return used


# ---------------------------------------------------------------------------
# file schema

def load_problem(path):
    """Read and validate a problem file (JSON schema, see README).

    Raises :class:`InvalidProblemError` with file/field context on parse
    errors and with the violated invariant on validation errors.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InvalidProblemError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidProblemError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        problem = problem_from_dict(raw)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, InvalidProblemError):
            raise
        raise InvalidProblemError(f"{path}: malformed problem file: {exc}") from exc
    violations = validate(problem)
    if violations:
        raise InvalidProblemError(f"{path}: " + "; ".join(violations))
    return problem


def problem_from_dict(raw):
    """Build a Problem from the parsed file dictionary (no validation)."""
    kind = raw["kind"]
    if kind == "truss":
        t = raw["truss"]
        nodes = np.asarray(t["nodes"], dtype=float)
        members_raw = t["members"]
        members = np.asarray([[m[0], m[1]] for m in members_raw], dtype=int)
        areas = np.asarray([m[2] for m in members_raw], dtype=float)
        geometry = TrussModel(nodes=nodes, members=members, areas=areas)
    elif kind in ("plane_strain", "solid"):
        g = raw["grid"]
        counts = tuple(int(c) for c in g["counts"])
        size = tuple(float(s) for s in g["size"])
        active = np.ones(counts, dtype=bool)
        for cell in g.get("inactive", []):
            active[tuple(int(c) for c in cell)] = False
        geometry = GridMesh(counts=counts, element_size=size, active=active)
    else:
        raise InvalidProblemError(f"unknown kind '{kind}'")

    mat = MaterialParams(
        youngs_modulus=float(raw["material"]["E"]),
        poisson_ratio=float(raw["material"]["nu"]),
    )
    supports = Supports(
        fixed_dofs=frozenset((int(n), int(a)) for n, a in raw["supports"])
    )
    loads = LoadCase(
        point_loads=tuple(
            (int(n), np.asarray(f, dtype=float)) for n, f in raw["loads"]
        )
    )
    return Problem(
        kind=kind,
        geometry=geometry,
        material=mat,
        loads=loads,
        supports=supports,
        v_target=float(raw["v_target"]),
    )


def problem_to_dict(problem):
    """Inverse of :func:`problem_from_dict`."""
    raw = {
        "kind": problem.kind,
        "material": {
            "E": problem.material.youngs_modulus,
            "nu": problem.material.poisson_ratio,
        },
    }
    if problem.kind == "truss":
        g = problem.geometry
        raw["truss"] = {
            "nodes": g.nodes.tolist(),
            "members": [
                [int(a), int(b), float(area)]
                for (a, b), area in zip(g.members, g.areas)
            ],
        }
    else:
        g = problem.geometry
        inactive = np.argwhere(~g.active)
        raw["grid"] = {
            "counts": list(g.counts),
            "size": list(g.element_size),
            "inactive": inactive.tolist(),
        }
    raw["supports"] = [[int(n), int(a)] for n, a in sorted(problem.supports.fixed_dofs)]
    raw["loads"] = [[int(n), np.asarray(f).tolist()] for n, f in problem.loads.point_loads]
    raw["v_target"] = problem.v_target
    return raw


def save_problem(problem, path):
    """Write a problem file; ``load_problem`` round-trips it exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# benchmarks

def build_benchmark(name):
    """Return one of the canned benchmark problems.

    Truss benchmarks are shipped as explicit node/member files (geometry
    reconstructed on a unit grid, lengths 1 m and sqrt(2) m, initial area
    0.5 m^2, E = 2e11 N/m^2).  Continuum benchmarks are generated grids.
    Load magnitudes are benchmark-specific: the penalty weights in
    BENCHMARK_PARAMS are absolute, so the load sets the balance between
    the strain-energy reward and the volume penalty.  The shipped values
    put the truss objective at 0.38 N*m for the two-bar optimum and the
    others at a comparable working point; edit the problem file to change
    them.
    """
    if name not in BENCHMARK_NAMES:
        raise InvalidProblemError(
            f"unknown benchmark '{name}'; choose from {', '.join(BENCHMARK_NAMES)}"
        )
    if name.startswith("truss"):
        ref = resources.files("annealtopt.benchmarks") / f"{name}.json"
        with resources.as_file(ref) as path:
            return load_problem(path)
    if name == "coat_hanger":
        return _grid_problem(
            kind="plane_strain",
            counts=(10, 5),
            size=(1.0, 1.0),
            fixed_nodes=[(0, 5), (10, 5)],
            loads=[((5, 0), (0.0, -3e6))],
            v_target=0.6,
        )
    if name == "cantilever_80x40":
        return _grid_problem(
            kind="plane_strain",
            counts=(80, 40),
            size=(1.0, 1.0),
            fixed_nodes=[(0, j) for j in range(41)],
            loads=[((80, 20), (0.0, -2e6))],
            v_target=0.6,
        )
    if name == "cube_20":
        n = 20
        return _grid_problem(
            kind="solid",
            counts=(n, n, n),
            size=(0.5, 0.5, 0.5),
            fixed_nodes=[(i, j, 0) for i in range(n + 1) for j in range(n + 1)],
            loads=[((n // 2, n // 2, n), (0.0, 0.0, 4e6))],
            v_target=0.25,
        )
    # lshape_40x40x5: 40x40 cells in-plane, 5 through the thickness,
    # upper-right in-plane quadrant inactive; clamped along the top edge
    # of the vertical leg, pulled down along the outer top edge of the
    # horizontal leg.
    nx, ny, nz = 40, 40, 5
    active = np.ones((nx, ny, nz), dtype=bool)
    active[nx // 2:, ny // 2:, :] = False
    inactive = np.argwhere(~active).tolist()
    fixed_nodes = [(i, ny, k) for i in range(nx // 2 + 1) for k in range(nz + 1)]
    loads = [((nx, ny // 2, k), (0.0, -3e6, 0.0)) for k in range(nz + 1)]
    return _grid_problem(
        kind="solid",
        counts=(nx, ny, nz),
        size=(2.0, 2.0, 2.0),
        fixed_nodes=fixed_nodes,
        loads=loads,
        v_target=0.5,
        inactive=inactive,
    )


def _grid_problem(kind, counts, size, fixed_nodes, loads, v_target, inactive=()):
    active = np.ones(counts, dtype=bool)
    for cell in inactive:
        active[tuple(cell)] = False
    mesh = GridMesh(counts=counts, element_size=size, active=active)
    dim = len(counts)
    fixed = frozenset(
        (mesh.node_index(ijk), axis) for ijk in fixed_nodes for axis in range(dim)
    )
    point_loads = tuple(
        (mesh.node_index(ijk), np.asarray(force, dtype=float)) for ijk, force in loads
    )
    problem = Problem(
        kind=kind,
        geometry=mesh,
        material=MaterialParams(youngs_modulus=2e11, poisson_ratio=0.3),
        loads=LoadCase(point_loads=point_loads),
        supports=Supports(fixed_dofs=fixed),
        v_target=v_target,
    )
    violations = validate(problem)
    if violations:
        raise InvalidProblemError("benchmark construction failed: " + "; ".join(violations))
    return problem
