"""Finite element analysis: element stiffness, assembly, solve, energies.

Element stiffness scales strictly linearly with the per-element design
variable rho_e.  Supports are applied by eliminating fixed dofs, which
keeps the reduced stiffness symmetric positive definite as long as every
rho_e stays above a small positive floor.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import cg, splu

#: Systems at or below this many free dofs use a direct sparse
#: factorization; larger ones fall back to Jacobi-preconditioned CG.
DIRECT_SOLVE_MAX_DOFS = 50_000

#: Relative residual required of every solve.
SOLVE_RTOL = 1e-10


class FemError(RuntimeError):
    """Raised on singular/non-SPD systems or solver non-convergence."""


@dataclass(frozen=True)
class ElementStiffness:
    """Dense element stiffness with its global dof map."""

    element: int
    matrix: np.ndarray   # symmetric, (n_dofs, n_dofs), N/m
    dofs: np.ndarray     # global dof indices


@dataclass(frozen=True)
class GlobalSystem:
    """Reduced equilibrium system over the free dofs only."""

    stiffness: object    # sparse CSC, (n_free, n_free)
    loads: np.ndarray    # (n_free,)
    free_dofs: np.ndarray
    n_dof: int           # total dofs before reduction


def elasticity_matrix(material, kind):
    """Isotropic elasticity matrix: 3x3 plane strain or 6x6 solid.

    Voigt order is (xx, yy, xy) in 2D and (xx, yy, zz, xy, yz, zx) in 3D.
    """
    e = material.youngs_modulus
    nu = material.poisson_ratio
    f = e / ((1 + nu) * (1 - 2 * nu))
    if kind == "plane_strain":
        return f * np.array([
            [1 - nu, nu, 0.0],
            [nu, 1 - nu, 0.0],
            [0.0, 0.0, (1 - 2 * nu) / 2],
        ])
    if kind == "solid":
        c = np.zeros((6, 6))
        c[:3, :3] = nu
        np.fill_diagonal(c[:3, :3], 1 - nu)
        c[3:, 3:] = np.eye(3) * (1 - 2 * nu) / 2
        return f * c
    raise ValueError(f"unknown elasticity kind '{kind}'")


def bar_stiffness(xa, xb, youngs, area):
    """Global-frame stiffness of a 2D/3D pin-jointed bar (full material)."""
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    d = xb - xa
    length = np.linalg.norm(d)
    if length <= 0:
        raise ValueError("zero-length bar")
    u = d / length
    block = np.outer(u, u) * (youngs * area / length)
    dim = len(u)
    k = np.zeros((2 * dim, 2 * dim))
    k[:dim, :dim] = block
    k[dim:, dim:] = block
    k[:dim, dim:] = -block
    k[dim:, :dim] = -block
    return k


_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)

_QUAD_CORNERS = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
_HEX_CORNERS = np.array([
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
], dtype=float)


def _shape_gradients(corners, point):
    """Parent-space gradients of the (bi/tri)linear shape functions."""
    n_nodes, dim = corners.shape
    grads = np.empty((n_nodes, dim))
    for a in range(n_nodes):
        for d in range(dim):
            g = 0.5 * corners[a, d]
            for other in range(dim):
                if other != d:
                    g *= 0.5 * (1 + corners[a, other] * point[other])
            grads[a, d] = g
    return grads


def quad_stiffness(cmat, sx, sy):
    """8x8 bilinear quadrilateral stiffness (2x2 Gauss, unit thickness)."""
    coords = 0.5 * (_QUAD_CORNERS + 1) * np.array([sx, sy])
    k = np.zeros((8, 8))
    for gx in _GAUSS:
        for gy in _GAUSS:
            dn = _shape_gradients(_QUAD_CORNERS, (gx, gy))
            jac = dn.T @ coords
            dndx = dn @ np.linalg.inv(jac).T
            b = np.zeros((3, 8))
            b[0, 0::2] = dndx[:, 0]
            b[1, 1::2] = dndx[:, 1]
            b[2, 0::2] = dndx[:, 1]
            b[2, 1::2] = dndx[:, 0]
            k += b.T @ cmat @ b * np.linalg.det(jac)
    return k


def hex_stiffness(cmat, sx, sy, sz):
    """24x24 trilinear hexahedron stiffness (2x2x2 Gauss)."""
    coords = 0.5 * (_HEX_CORNERS + 1) * np.array([sx, sy, sz])
    k = np.zeros((24, 24))
    for gx in _GAUSS:
        for gy in _GAUSS:
            for gz in _GAUSS:
                dn = _shape_gradients(_HEX_CORNERS, (gx, gy, gz))
                jac = dn.T @ coords
                dndx = dn @ np.linalg.inv(jac).T
                b = np.zeros((6, 24))
                b[0, 0::3] = dndx[:, 0]
                b[1, 1::3] = dndx[:, 1]
                b[2, 2::3] = dndx[:, 2]
                b[3, 0::3] = dndx[:, 1]
                b[3, 1::3] = dndx[:, 0]
                b[4, 1::3] = dndx[:, 2]
                b[4, 2::3] = dndx[:, 1]
                b[5, 0::3] = dndx[:, 2]
                b[5, 2::3] = dndx[:, 0]
                k += b.T @ cmat @ b * np.linalg.det(jac)
    return k


class Assembler:
    """Precomputed assembly structure for one problem.

    Caches element dof maps and full-material element stiffness so that
    repeated assemblies with changing rho only rescale and sum.  For grid
    problems all cells share a single stiffness block.
    """

    def __init__(self, problem):
        self.problem = problem
        dim = problem.dim
        if problem.kind == "truss":
            g = problem.geometry
            e_mod = problem.material.youngs_modulus
            self.edof = np.empty((g.n_members, 2 * dim), dtype=np.int64)
            self.k0 = np.empty((g.n_members, 2 * dim, 2 * dim))
            for e, (a, b) in enumerate(g.members):
                self.edof[e] = np.concatenate(
                    [a * dim + np.arange(dim), b * dim + np.arange(dim)]
                )
                self.k0[e] = bar_stiffness(g.nodes[a], g.nodes[b], e_mod, g.areas[e])
            self.k0_shared = None
        else:
            g = problem.geometry
            cmat = elasticity_matrix(problem.material, problem.kind)
            if dim == 2:
                self.k0_shared = quad_stiffness(cmat, *g.element_size)
            else:
                self.k0_shared = hex_stiffness(cmat, *g.element_size)
            cells = g.active_cells()
            ndpe = len(self.k0_shared)
            self.edof = np.empty((len(cells), ndpe), dtype=np.int64)
            for e, ijk in enumerate(cells):
                nodes = np.asarray(g.cell_nodes(ijk), dtype=np.int64)
                self.edof[e] = (
                    np.repeat(nodes * dim, dim) + np.tile(np.arange(dim), len(nodes))
                )
            self.k0 = None

        fixed = {n * dim + a for n, a in problem.supports.fixed_dofs}
        used = np.zeros(problem.n_dof, dtype=bool)
        used[self.edof.ravel()] = True
        free_mask = used.copy()
        free_mask[list(fixed)] = False
        self.free_dofs = np.flatnonzero(free_mask)
        # global dof -> reduced index, -1 if eliminated
        self.reduced_index = np.full(problem.n_dof, -1, dtype=np.int64)
        self.reduced_index[self.free_dofs] = np.arange(len(self.free_dofs))

        red = self.reduced_index[self.edof]
        ndpe = self.edof.shape[1]
        self._rows = np.repeat(red, ndpe, axis=1).ravel()
        self._cols = np.tile(red, (1, ndpe)).ravel()
        self._keep = (self._rows >= 0) & (self._cols >= 0)
        self._rows = self._rows[self._keep]
        self._cols = self._cols[self._keep]

        self.loads = np.zeros(len(self.free_dofs))
        for node, force in problem.loads.point_loads:
            for axis in range(dim):
                r = self.reduced_index[node * dim + axis]
                if r >= 0:
                    self.loads[r] += force[axis]

    def element_matrices(self, rho):
        """Stacked rho-scaled element stiffness, shape (n_elem, ndpe, ndpe)."""
        rho = np.asarray(rho, dtype=float)
        if self.k0 is not None:
            return rho[:, None, None] * self.k0
        return rho[:, None, None] * self.k0_shared[None, :, :]

    def assemble(self, rho):
        vals = self.element_matrices(rho).reshape(len(self.edof), -1).ravel()
        n_free = len(self.free_dofs)
        k = coo_matrix(
            (vals[self._keep], (self._rows, self._cols)), shape=(n_free, n_free)
        ).tocsc()
        return GlobalSystem(
            stiffness=k,
            loads=self.loads.copy(),
            free_dofs=self.free_dofs,
            n_dof=self.problem.n_dof,
        )

    def strain_energy(self, rho, displacements):
        """Per-element strain energy U_e^T (rho_e K0_e) U_e, always >= 0."""
        ue = displacements[self.edof]
        if self.k0 is not None:
            se = np.einsum("ei,eij,ej->e", ue, self.k0, ue)
        else:
            se = np.einsum("ei,ij,ej->e", ue, self.k0_shared, ue)
        se = np.asarray(rho, dtype=float) * se
        # quadratic form of an SPSD matrix; clip float-level negatives
        return np.maximum(se, 0.0)


def element_stiffness(problem, element, rho_e):
    """Rho-scaled stiffness of one element with its global dof map."""
    asm = Assembler(problem)
    if asm.k0 is not None:
        mat = rho_e * asm.k0[element]
    else:
        mat = rho_e * asm.k0_shared
    return ElementStiffness(element=element, matrix=mat, dofs=asm.edof[element].copy())


def assemble(problem, rho):
    """Assemble the reduced equilibrium system for the given design."""
    return Assembler(problem).assemble(rho)


def solve_displacements(system, direct_max_dofs=DIRECT_SOLVE_MAX_DOFS):
    """Solve K u = F; returns the full-length displacement vector.

    Fixed (and inactive-orphan) dofs come back as zeros.  Uses a sparse
    direct factorization up to ``direct_max_dofs`` free dofs and
    Jacobi-preconditioned conjugate gradients above.  The relative
    residual is verified against ``SOLVE_RTOL``.
    """
    k = system.stiffness
    f = system.loads
    n = k.shape[0]
    fnorm = np.linalg.norm(f)
    if fnorm == 0.0:
        u_free = np.zeros(n)
    elif n <= direct_max_dofs:
        try:
            lu = splu(k, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise FemError(f"direct factorization failed: {exc}") from exc
        u_free = lu.solve(f)
        resid = np.linalg.norm(k @ u_free - f)
        for _ in range(10):  # iterative refinement for ill-conditioned designs
            if np.isfinite(resid) and resid <= SOLVE_RTOL * fnorm:
                break
            better = u_free + lu.solve(f - k @ u_free)
            new_resid = np.linalg.norm(k @ better - f)
            if not np.isfinite(new_resid) or new_resid >= resid:
                break
            u_free, resid = better, new_resid
        if not np.isfinite(resid) or resid > SOLVE_RTOL * fnorm:
            raise FemError(
                f"direct solve residual {resid:.3e} exceeds "
                f"{SOLVE_RTOL:.0e} * |F| = {SOLVE_RTOL * fnorm:.3e}"
            )
    else:
        diag = k.diagonal()
        if np.any(diag <= 0):
            bad = int(np.argmin(diag))
            raise FemError(f"non-SPD system: nonpositive diagonal at free dof {bad}")
        from scipy.sparse import diags

        m = diags(1.0 / diag)
        u_free, info = cg(k, f, rtol=SOLVE_RTOL, atol=0.0, maxiter=50 * n, M=m)
        if info != 0:
            raise FemError(f"conjugate gradients did not converge (info={info})")
    u = np.zeros(system.n_dof)
    u[system.free_dofs] = u_free
    return u


def elemental_strain_energy(problem, rho, displacements):
    """Strain energy of every element at the current design, N*m."""
    return Assembler(problem).strain_energy(rho, displacements)


def total_compliance(system, displacements):
    """External work F^T U of the solved system, N*m."""
    return float(system.loads @ displacements[system.free_dofs])


def solve_problem(problem, rho, assembler=None, direct_max_dofs=DIRECT_SOLVE_MAX_DOFS):
    """One full analysis: assemble, solve, and report energies.

    Returns ``(displacements, compliance, strain_energy, fem_seconds)``.
    Reuses an :class:`Assembler` when the caller iterates the same problem.
    """
    t0 = time.perf_counter()
    asm = assembler if assembler is not None else Assembler(problem)
    system = asm.assemble(rho)
    u = solve_displacements(system, direct_max_dofs=direct_max_dofs)
    secs = time.perf_counter() - t0
    return u, total_compliance(system, u), asm.strain_energy(rho, u), secs
