"""Design state and the multiplicative update scheme.

Each element carries a design variable rho_e that scales its stiffness
linearly.  Every iteration multiplies rho_e by an updater alpha_e decoded
from the solver's bit assignment: alpha_e = theta_e * xi(q_e), floored at
ALPHA_FLOOR so a deleted element keeps a vanishing but positive stiffness
and can in principle be reintroduced later.  When a variable would exceed
1 it is clamped there and its cap theta_e latches to 1 permanently, which
stops further growth while still allowing deletion.
"""

from dataclasses import dataclass, field

import numpy as np

#: Lower bounds for design variables and updaters.  A zero bit maps to
#: ALPHA_FLOOR instead of zero so the stiffness stays positive definite.
RHO_FLOOR = 1e-6
ALPHA_FLOOR = 1e-6


@dataclass
class DesignState:
    """Per-element design variables, caps, and the updater history.

    ``rho`` always lies in [RHO_FLOOR, 1].  ``theta`` holds the current
    per-element cap: the configured value until the element saturates,
    1.0 afterwards.  ``alpha_log`` records every applied updater vector;
    replaying the log from the initial state reproduces ``rho`` exactly.
    """

    rho: np.ndarray
    theta: np.ndarray
    rho0: float
    iteration: int = 0
    alpha_log: list = field(default_factory=list)


def init_design(n_elem, rho0, theta):
    """Uniform initial state: all rho_e = rho0, all caps = theta."""
    if not (0 < rho0 <= 1):
        raise ValueError(f"rho0 must lie in (0, 1], got {rho0}")
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    return DesignState(
        rho=np.full(n_elem, float(rho0)),
        theta=np.full(n_elem, float(theta)),
        rho0=float(rho0),
    )


def decode_alphas(bits, layout, state):
    """Decode a bit assignment into the per-element updater vector.

    alpha_e = max(theta_e * xi(q_e), ALPHA_FLOOR) where q_e is the
    element's qubit group under ``layout``.
    """
    bits = np.asarray(bits)
    if bits.shape[0] != layout.n_qubits:
        raise ValueError(
            f"bit vector length {bits.shape[0]} does not match layout "
            f"N_q = {layout.n_qubits}"
        )
    if layout.n_elem != len(state.rho):
        raise ValueError(
            f"layout has {layout.n_elem} elements, state has {len(state.rho)}"
        )
    groups = bits[: layout.n_elem * layout.n_q].reshape(layout.n_elem, layout.n_q)
    xi = groups @ layout.weights / layout.weights.sum()
    return np.maximum(state.theta * xi, ALPHA_FLOOR)


def apply_update(state, alpha):
    """Multiplicative update rho' = alpha * rho with cap latching.

    Returns a new state; the input is left untouched.  Values pushed
    above 1 clamp to 1 and latch that element's cap to 1; values pushed
    below RHO_FLOOR clamp to the floor.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < ALPHA_FLOOR):
        raise ValueError("updater below ALPHA_FLOOR")
    rho = alpha * state.rho
    theta = state.theta.copy()
    over = rho > 1.0
    rho[over] = 1.0
    theta[over] = 1.0
    rho = np.maximum(rho, RHO_FLOOR)
    return DesignState(
        rho=rho,
        theta=theta,
        rho0=state.rho0,
        iteration=state.iteration + 1,
        alpha_log=state.alpha_log + [alpha.copy()],
    )


def volume_ratio(state, problem):
    """Current material volume over the full-material volume."""
    return material_fraction(state.rho, problem)


def material_fraction(rho, problem):
    """Sum of rho_e * V0_e over the total initial volume."""
    volumes = problem.element_volumes()
    return float(np.asarray(rho) @ volumes / volumes.sum())
