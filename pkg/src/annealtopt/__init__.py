"""Topology optimization with annealing-based multiplicative design updates.

Structural analysis runs on a classical finite element path; the design
update at each iteration is the ground state of a quadratic binary cost
built from elemental strain energies and a penalized volume budget.
"""

from .design import (
    ALPHA_FLOOR,
    RHO_FLOOR,
    DesignState,
    apply_update,
    decode_alphas,
    init_design,
    material_fraction,
    volume_ratio,
)
from .driver import (
    IterationRecord,
    OptimizationError,
    RunConfig,
    RunResult,
    check_convergence,
    run_annealing_optimization,
    tfs,
)
from .fem import (
    Assembler,
    ElementStiffness,
    FemError,
    GlobalSystem,
    assemble,
    elasticity_matrix,
    element_stiffness,
    elemental_strain_energy,
    solve_displacements,
    solve_problem,
    total_compliance,
)
from .model import (
    BENCHMARK_NAMES,
    BENCHMARK_PARAMS,
    GridMesh,
    InvalidProblemError,
    LoadCase,
    MaterialParams,
    Problem,
    Supports,
    TrussModel,
    build_benchmark,
    load_problem,
    save_problem,
    validate,
)
from .oc import OcError, OcParams, oc_update, run_oc
from .qubo import (
    QuboProblem,
    VariableMap,
    build_qubo,
    direct_cost,
    evaluate,
    make_layout,
    xi,
)
from .solvers import (
    SaParams,
    SolveError,
    SolveOutcome,
    delta_energy,
    from_exchange,
    read_exchange,
    solve_exhaustive,
    solve_remote,
    solve_sa,
    to_exchange,
    write_exchange,
)

__version__ = "0.1.0"
