"""Optimize the 80x40 plane-strain cantilever and write VTK snapshots.

A 3201-qubit cost function per iteration, searched with the simulated
annealer.  Snapshots land in ./out_cantilever as legacy VTK files
(open them in ParaView; threshold the ``rho`` cell scalar at 0.5).

Run:  python demos/continuum_cantilever.py        (about a minute)
"""

from annealtopt import RunConfig, build_benchmark, run_annealing_optimization
from annealtopt.output import BundleWriter, run_summary

problem = build_benchmark("cantilever_80x40")
config = RunConfig(lam=8e3, rho0=0.6, theta_e=1.1, theta_s=0.02,
                   solver="sa", seed=0, max_iterations=40)

writer = BundleWriter("out_cantilever", problem)
result = run_annealing_optimization(problem, config,
                                    on_iteration=writer.on_iteration)
writer.finalize(result, run_summary(problem, result))

print(f"iterations: {result.iterations}, converged: {result.converged}")
print(f"final compliance: {result.final_objective:.6g} N*m")
print(f"final volume fraction: {result.final_volume_ratio:.4f} "
      f"(target {problem.v_target})")
print(f"search time across all iterations: {result.tfs_s:.2f} s")

# coarse terminal picture, one character per 2x2 element block
rho = result.final_rho.reshape(80, 40)
print("\nfinal layout (left edge clamped, tip load at mid right):")
for j in range(39, -1, -4):
    print("".join("#" if rho[i, j] > 0.5 else "." for i in range(0, 80, 2)))
print("\nbundle written to out_cantilever/ (convergence.csv, VTK snapshots)")
