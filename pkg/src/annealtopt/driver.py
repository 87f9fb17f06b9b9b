"""Optimization loop: analyze, build the cost function, search, update.

Each design iteration solves equilibrium on a classical path, assembles
the quadratic cost from the elemental strain energies and the volume
budget, asks a solver for a low-energy bit assignment, decodes it into
per-element updaters, and applies the multiplicative update with cap
latching.  The loop stops when the objective changes by less than the
tolerance for a window of consecutive iterations.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import fem
from .design import (
    RHO_FLOOR,
    apply_update,
    decode_alphas,
    init_design,
    material_fraction,
)
from .qubo import build_qubo, make_layout
from .solvers import SaParams, SolveError, solve_exhaustive, solve_remote, solve_sa

#: Guard for relative changes when the objective is (near) zero.
CONVERGENCE_EPS = 1e-30


@dataclass
class RunConfig:
    """Parameters of one optimization run.

    ``v_target = None`` uses the problem's stored target.  ``seed`` feeds
    the annealer so a fixed (problem, config) pair reproduces bit-for-bit.
    """

    lam: float
    rho0: float
    theta_e: float = 1.1
    theta_s: float = 0.02
    n_q: int = 1
    n_s: int = 1
    v_target: float = None
    tolerance: float = 0.01
    window: int = 5
    max_iterations: int = 200
    solver: str = "sa"
    sa: SaParams = field(default_factory=SaParams)
    exhaustive_cap: int = 24
    remote_endpoint: str = None
    remote_timeout: float = 60.0
    seed: int = 0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"penalty weight must be > 0, got {self.lam}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.solver not in ("sa", "exhaustive", "remote"):
            raise ValueError(f"unknown solver '{self.solver}'")


@dataclass
class IterationRecord:
    """State entering one iteration plus the decision made there."""

    iteration: int
    objective: float       # F^T U of the design entering the iteration
    volume_ratio: float    # of the design after the iteration's update
    energy: float          # cost of the chosen bits
    solver_time_s: float   # wall time around the search call only
    n_cap: int             # elements at rho == 1 after the update
    n_floor: int           # elements at the floor after the update


@dataclass
class RunResult:
    """Run history, final design, and timing."""

    history: list
    final_rho: np.ndarray
    final_state: object    # DesignState for annealing runs, None for OC
    converged: bool
    tfs_s: float           # total search time over all iterations
    final_objective: float
    final_volume_ratio: float
    method: str
    n_qubits: int = 0

    @property
    def iterations(self):
        return len(self.history)


class OptimizationError(RuntimeError):
    """Analysis or search failed mid-run; carries the partial history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def check_convergence(objectives, tolerance=0.01, window=5):
    """True when the last ``window`` relative changes all stay below
    ``tolerance``.  Needs at least window + 1 objective values."""
    if len(objectives) < window + 1:
        return False
    tail = objectives[-(window + 1):]
    for prev, cur in zip(tail, tail[1:]):
        if abs(cur - prev) / max(abs(prev), CONVERGENCE_EPS) >= tolerance:
            return False
    return True


def tfs(mode, t_per, repeats, iterations):
    """Time-to-find-solution: t*R*I for 'qa', t*I for 'sa'."""
    if t_per < 0 or repeats < 0 or iterations < 0:
        raise ValueError("tfs arguments must be nonnegative")
    if mode == "qa":
        return t_per * repeats * iterations
    if mode == "sa":
        return t_per * iterations
    raise ValueError(f"unknown tfs mode '{mode}'")


def _solve_bits(qubo_problem, config):
    if config.solver == "exhaustive":
        return solve_exhaustive(qubo_problem, max_qubits=config.exhaustive_cap)
    if config.solver == "remote":
        if not config.remote_endpoint:
            raise ValueError("remote solver requires an endpoint")
        return solve_remote(
            qubo_problem, config.remote_endpoint, timeout=config.remote_timeout
        )
    return solve_sa(qubo_problem, replace(config.sa, seed=config.seed))


def run_annealing_optimization(problem, config, on_iteration=None):
    """Run the full update loop on ``problem``; returns a RunResult.

    ``on_iteration(record, state)`` is called after every update with the
    fresh record and the post-update design state (used for snapshots).
    Analysis or solver failures raise :class:`OptimizationError` with the
    partial history attached.
    """
    v_target = problem.v_target if config.v_target is None else config.v_target
    state = init_design(problem.n_elem, config.rho0, config.theta_e)
    layout = make_layout(problem.n_elem, config.n_q, config.n_s)
    asm = fem.Assembler(problem)

    history = []
    objectives = []
    converged = False
    for it in range(config.max_iterations):
        try:
            u, compliance, se, _ = fem.solve_problem(problem, state.rho, assembler=asm)
            qubo_problem = build_qubo(
                problem, state, se, config.lam, config.theta_s, v_target, layout
            )
            t0 = time.perf_counter()
            outcome = _solve_bits(qubo_problem, config)
            search_secs = time.perf_counter() - t0
        except (fem.FemError, SolveError) as exc:
            raise OptimizationError(str(exc), history) from exc
        alpha = decode_alphas(outcome.bits, layout, state)
        state = apply_update(state, alpha)
        objectives.append(compliance)
        record = IterationRecord(
            iteration=it,
            objective=compliance,
            volume_ratio=material_fraction(state.rho, problem),
            energy=outcome.energy,
            solver_time_s=search_secs,
            n_cap=int((state.rho == 1.0).sum()),
            n_floor=int((state.rho == RHO_FLOOR).sum()),
        )
        history.append(record)
        if on_iteration is not None:
            on_iteration(record, state)
        if check_convergence(objectives, config.tolerance, config.window):
            converged = True
            break

    if history:
        _, final_objective, _, _ = fem.solve_problem(problem, state.rho, assembler=asm)
    else:
        final_objective = float("nan")
    return RunResult(
        history=history,
        final_rho=state.rho.copy(),
        final_state=state,
        converged=converged,
        tfs_s=sum(r.solver_time_s for r in history),
        final_objective=final_objective,
        final_volume_ratio=material_fraction(state.rho, problem),
        method=config.solver,
        n_qubits=layout.n_qubits,
    )
