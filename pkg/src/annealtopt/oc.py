"""Optimality-criteria baseline for compliance minimization.

Classical density update: each element moves by the damped ratio of its
compliance sensitivity to the (bisected) volume multiplier, clamped by a
move limit and the [RHO_FLOOR, 1] box.  Stiffness interpolation is linear
in rho, matching the annealing path, so the sensitivity of compliance is
-dc/drho_e = SE_e / rho_e.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import fem
from .design import RHO_FLOOR, material_fraction


class OcError(RuntimeError):
    """Raised when the volume multiplier cannot be bracketed."""


@dataclass
class OcParams:
    """Move limit, damping exponent, and bisection tolerance on volume."""

    move: float = 0.2
    damping: float = 0.5
    volume_tol: float = 1e-6
    max_iterations: int = 200
    tolerance: float = 0.01
    window: int = 5

    def __post_init__(self):
        if not (0 < self.move < 1):
            raise ValueError(f"move limit must lie in (0, 1), got {self.move}")
        if not (0 < self.damping <= 1):
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")


def oc_update(rho, sensitivities, volumes, v_target, params=None):
    """One density update with the volume multiplier found by bisection.

    ``sensitivities`` are -dc/drho_e >= 0.  The updated design satisfies
    sum(rho' v)/V0 = v_target within ``volume_tol`` unless a move limit or
    box bound binds first.  Scaling all sensitivities by a common positive
    factor leaves the result unchanged.
    """
    if params is None:
        params = OcParams()
    rho = np.asarray(rho, dtype=float)
    sens = np.asarray(sensitivities, dtype=float)
    volumes = np.asarray(volumes, dtype=float)
    if np.any(sens < 0):
        raise ValueError("sensitivities must be nonnegative")
    v0 = volumes.sum()
    lower = np.maximum(RHO_FLOOR, rho - params.move)
    upper = np.minimum(1.0, rho + params.move)

    if sens.max() == 0.0:
        # volume does not react to the multiplier: only the move-limited
        # floor is reachable
        new = lower
        if abs(new @ volumes / v0 - v_target) > params.volume_tol:
            raise OcError(
                "bisection cannot bracket the volume target: all sensitivities "
                "are zero and the move-limited design misses the target"
            )
        return new

    def candidate(multiplier):
        ratio = sens / (multiplier * volumes)
        return np.clip(rho * ratio ** params.damping, lower, upper)

    # multiplier -> volume is nonincreasing; bracket from the sensitivity scale
    if upper @ volumes / v0 < v_target - params.volume_tol:
        return upper  # even the fully relaxed step stays under target
    lo = 0.0
    hi = 2.0 * float((sens / volumes).max())
    for _ in range(200):
        if candidate(hi) @ volumes / v0 <= v_target:
            break
        hi *= 2.0
    new = candidate(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0 or mid == lo or mid == hi:
            break
        new = candidate(mid)
        vol = new @ volumes / v0
        if abs(vol - v_target) <= params.volume_tol:
            return new
        if vol > v_target:
            lo = mid
        else:
            hi = mid
    return new


def run_oc(problem, params=None, v_target=None, rho0=None):
    """Iterate analysis and OC updates until the convergence rule fires.

    Stops when the objective changes by less than ``tolerance`` for
    ``window`` consecutive iterations, or at ``max_iterations``.  Returns
    the shared RunResult record (imported lazily to avoid a cycle).
    """
    from .driver import IterationRecord, RunResult, check_convergence

    if params is None:
        params = OcParams()
    if v_target is None:
        v_target = problem.v_target
    if rho0 is None:
        rho0 = v_target  # start on the volume target

    volumes = problem.element_volumes()
    asm = fem.Assembler(problem)
    rho = np.full(problem.n_elem, float(rho0))
    history = []
    objectives = []
    converged = False
    for it in range(params.max_iterations):
        u, compliance, se, _ = fem.solve_problem(problem, rho, assembler=asm)
        objectives.append(compliance)
        t0 = time.perf_counter()
        rho = oc_update(rho, se / rho, volumes, v_target, params)
        update_secs = time.perf_counter() - t0
        history.append(IterationRecord(
            iteration=it,
            objective=compliance,
            volume_ratio=material_fraction(rho, problem),
            energy=float("nan"),
            solver_time_s=update_secs,
            n_cap=int((rho == 1.0).sum()),
            n_floor=int((rho == RHO_FLOOR).sum()),
        ))
        if check_convergence(objectives, params.tolerance, params.window):
            converged = True
            break

    if history:
        _, final_objective, _, _ = fem.solve_problem(problem, rho, assembler=asm)
    else:
        final_objective = float("nan")
    return RunResult(
        history=history,
        final_rho=rho,
        final_state=None,
        converged=converged,
        tfs_s=sum(r.solver_time_s for r in history),
        final_objective=final_objective,
        final_volume_ratio=material_fraction(rho, problem),
        method="oc",
    )
