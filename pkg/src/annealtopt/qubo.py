"""Binary encoding of design updaters and the quadratic cost function.

Each element owns ``n_q`` qubits and the slack variable owns ``n_s``.
A qubit group decodes through the normalized weighted sum
``xi(q) = sum_k w_k q_k / sum_k w_k`` with weights ``w_k = k``, so the
updater is ``alpha_e = theta_e * xi(q_e)`` and the slack value is
``sbar = theta_s * xi(q_s)``.

The cost to minimize at one design iteration is

    cost(q) = -sum_e theta_e * xi(q_e) * SE_e
              + lam * (sum_e phi_e * xi(q_e) + theta_s * xi(q_s) - vbar)^2

with phi_e = theta_e * V_e(rho_e) / V0.  The first term rewards keeping
high-strain-energy elements; the squared term is the penalty form of the
volume budget with the slack absorbing under-target room.  Expanding the
square over binary variables (q^2 = q) gives a quadratic whose entire
pair structure is the rank-one outer product lam * phi phi^T; the builder
keeps that factored form so solvers can evaluate single-bit flips in O(1)
and the dense pair matrix never needs materializing for large meshes.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class VariableMap:
    """Layout of qubits: per-element groups followed by the slack group."""

    n_elem: int
    n_q: int
    n_s: int

    @property
    def n_qubits(self):
        return self.n_elem * self.n_q + self.n_s

    @property
    def weights(self):
        """Encoding weights w_k = k for an element's qubit group."""
        return np.arange(1, self.n_q + 1, dtype=float)

    @property
    def slack_weights(self):
        return np.arange(1, self.n_s + 1, dtype=float)

    def element_slice(self, e):
        return slice(e * self.n_q, (e + 1) * self.n_q)

    @property
    def slack_slice(self):
        return slice(self.n_elem * self.n_q, self.n_elem * self.n_q + self.n_s)


def make_layout(n_elem, n_q=1, n_s=1):
    """Variable layout for ``n_elem`` elements; N_q = n_elem*n_q + n_s."""
    if n_q < 1 or n_s < 1:
        raise ValueError("n_q and n_s must be >= 1")
    return VariableMap(n_elem=int(n_elem), n_q=int(n_q), n_s=int(n_s))


def xi(bits, weights):
    """Normalized weighted binary expansion, in [0, 1]."""
    bits = np.asarray(bits, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if bits.shape != weights.shape:
        raise ValueError("bit group and weights differ in length")
    return float(bits @ weights / weights.sum())


@dataclass
class QuboProblem:
    """Quadratic cost over binary variables.

    ``linear`` holds every per-qubit coefficient (the diagonal).  Pair
    coefficients come in two parts: an explicit upper-triangular dict
    ``quadratic[(i, j)] = v`` for i < j, and an implicit rank-one block
    contributing ``2 * lam * phi_i * phi_j`` for every pair.  Either part
    may be empty.  ``offset`` is the constant term.
    """

    linear: np.ndarray
    offset: float
    layout: VariableMap = None
    lam: float = 0.0
    phi: np.ndarray = None
    quadratic: dict = field(default_factory=dict)

    @property
    def n_qubits(self):
        return len(self.linear)

    def quadratic_coefficient(self, i, j):
        """Pair coefficient for i != j (order-insensitive)."""
        if i == j:
            raise ValueError("diagonal terms live in `linear`")
        a, b = (i, j) if i < j else (j, i)
        v = self.quadratic.get((a, b), 0.0)
        if self.phi is not None and self.lam != 0.0:
            v += 2.0 * self.lam * self.phi[a] * self.phi[b]
        return v

    def materialized(self):
        """Equivalent problem with every pair stored explicitly.

        Quadratic in the qubit count; intended for export and for small
        instances, not for large meshes.
        """
        quad = dict(self.quadratic)
        if self.phi is not None and self.lam != 0.0:
            nz = np.flatnonzero(self.phi)
            for a_pos, i in enumerate(nz):
                for j in nz[a_pos + 1:]:
                    key = (int(i), int(j))
                    quad[key] = quad.get(key, 0.0) + 2.0 * self.lam * self.phi[i] * self.phi[j]
        return QuboProblem(
            linear=self.linear.copy(),
            offset=self.offset,
            layout=self.layout,
            lam=0.0,
            phi=None,
            quadratic=quad,
        )

    def quad_arrays(self):
        """Explicit pairs as (i, j, v) arrays for vectorized evaluation."""
        if not self.quadratic:
            z = np.zeros(0, dtype=np.int64)
            return z, z, np.zeros(0)
        items = sorted(self.quadratic.items())
        idx = np.array([k for k, _ in items], dtype=np.int64)
        val = np.array([v for _, v in items])
        return idx[:, 0], idx[:, 1], val


def build_qubo(problem, state, strain_energy, lam, theta_s, v_target, layout):
    """Assemble the iteration's cost function in factored QUBO form.

    ``strain_energy`` must come from the equilibrium solve at the current
    design.  Per-qubit weight fractions are omega_k = w_k / sum w; with
    phi_e = theta_e * V_e(rho_e) / V0 the coefficients are

    - element qubit (e, k) linear:
        -theta_e * omega_k * SE_e  +  lam * (phi_e * omega_k)^2
        - 2 * lam * v_target * phi_e * omega_k
    - slack qubit k linear:
        lam * (theta_s * omega_k)^2 - 2 * lam * v_target * theta_s * omega_k
    - every pair (i, j): 2 * lam * phi_i * phi_j with the per-qubit
      volume weights phi_i (held in factored form)
    - offset: lam * v_target^2
    """
    se = np.asarray(strain_energy, dtype=float)
    n_elem = layout.n_elem
    if len(se) != n_elem or len(state.rho) != n_elem:
        raise ValueError(
            f"size mismatch: layout {n_elem} elements, "
            f"SE {len(se)}, state {len(state.rho)}"
        )
    if lam <= 0:
        # allow exactly zero for the unconstrained objective (tests)
        if lam < 0:
            raise ValueError("penalty weight must be >= 0")
    if theta_s <= 0:
        raise ValueError("theta_s must be > 0")

    volumes = problem.element_volumes()
    vfrac = state.rho * volumes / volumes.sum()
    phi_e = state.theta * vfrac

    omega = layout.weights / layout.weights.sum()
    omega_s = layout.slack_weights / layout.slack_weights.sum()

    n = layout.n_qubits
    phi = np.empty(n)
    phi[: n_elem * layout.n_q] = np.repeat(phi_e, layout.n_q) * np.tile(omega, n_elem)
    phi[layout.slack_slice] = theta_s * omega_s

    objective = np.zeros(n)
    objective[: n_elem * layout.n_q] = -np.repeat(state.theta * se, layout.n_q) * np.tile(
        omega, n_elem
    )

    linear = objective + lam * phi ** 2 - 2.0 * lam * v_target * phi
    return QuboProblem(
        linear=linear,
        offset=lam * v_target ** 2,
        layout=layout,
        lam=lam,
        phi=phi,
    )


def evaluate(qubo, bits):
    """Cost of a bit assignment: offset + linear + pair terms."""
    bits = np.asarray(bits, dtype=float)
    if bits.shape[0] != qubo.n_qubits:
        raise ValueError("bit vector length does not match the problem")
    e = qubo.offset + qubo.linear @ bits
    if qubo.phi is not None and qubo.lam != 0.0:
        g = qubo.phi @ bits
        e += qubo.lam * (g * g - (qubo.phi ** 2) @ bits)
    if qubo.quadratic:
        qi, qj, qv = qubo.quad_arrays()
        e += float((bits[qi] * bits[qj]) @ qv)
    return float(e)


def direct_cost(problem, state, strain_energy, lam, theta_s, v_target, layout, bits):
    """Unexpanded cost of a bit assignment; oracle for the QUBO expansion.

    Decodes the bits to updaters and the slack value, then evaluates
    -sum alpha_e SE_e + lam * (sum alpha_e V_e/V0 - (v_target - sbar))^2
    without going through per-qubit coefficients.
    """
    bits = np.asarray(bits, dtype=float)
    se = np.asarray(strain_energy, dtype=float)
    n_elem = layout.n_elem
    groups = bits[: n_elem * layout.n_q].reshape(n_elem, layout.n_q)
    xis = groups @ layout.weights / layout.weights.sum()
    alpha = state.theta * xis
    sbar = theta_s * xi(bits[layout.slack_slice], layout.slack_weights)

    volumes = problem.element_volumes()
    vfrac = state.rho * volumes / volumes.sum()
    residual = float(alpha @ vfrac) - (v_target - sbar)
    return float(-(alpha @ se) + lam * residual * residual)
