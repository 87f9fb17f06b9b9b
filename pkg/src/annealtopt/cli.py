"""Command-line front end.

Subcommands: ``run`` (annealing optimization), ``oc`` (baseline), ``export-qubo``
(first-iteration cost function in the exchange format), ``bench`` (seeded
benchmark sweeps).  Problems are given as a file path or ``benchmark:<name>``.
Exit codes: 0 success, 2 usage/validation error, 3 analysis/solver failure.
"""

import argparse
import os
import sys

from . import fem, model, output
from .driver import OptimizationError, RunConfig, run_annealing_optimization
from .model import InvalidProblemError
from .oc import OcError, OcParams, run_oc
from .qubo import build_qubo, make_layout
from .solvers import SaParams, SolveError, write_exchange
from .design import init_design

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILED = 3

BENCH_SUITES = {
    "truss": ("truss6", "truss21", "truss29"),
    "continuum": ("coat_hanger", "cantilever_80x40"),
    "solid": ("cube_20", "lshape_40x40x5"),
}


def _resolve_problem(source):
    """Problem from 'benchmark:<name>' or a file path, plus run defaults."""
    if source.startswith("benchmark:"):
        name = source.split(":", 1)[1]
        problem = model.build_benchmark(name)
        return problem, dict(model.BENCHMARK_PARAMS[name]), name
    problem = model.load_problem(source)
    return problem, dict(rho0=0.5, theta_e=1.1, theta_s=0.02, lam=None), source


def _run_config(args, defaults, solver=None):
    lam = args.lam if args.lam is not None else defaults.get("lam")
    if lam is None:
        raise InvalidProblemError(
            "--lambda is required for problems without benchmark defaults"
        )
    return RunConfig(
        lam=lam,
        rho0=args.rho0 if args.rho0 is not None else defaults["rho0"],
        theta_e=args.theta if args.theta is not None else defaults["theta_e"],
        theta_s=args.theta_s if args.theta_s is not None else defaults["theta_s"],
        n_q=args.nq,
        n_s=args.ns,
        v_target=args.v_target,
        max_iterations=args.max_iters,
        solver=solver if solver is not None else args.solver,
        sa=SaParams(sweeps=args.sweeps, restarts=args.restarts),
        remote_endpoint=getattr(args, "endpoint", None),
        seed=args.seed,
    )


def _add_problem_options(parser, with_solver=True):
    parser.add_argument("--problem", required=True,
                        help="problem file or benchmark:<name>")
    if with_solver:
        parser.add_argument("--solver", choices=("sa", "exhaustive", "remote"),
                            default="sa")
        parser.add_argument("--endpoint", help="URL for --solver remote")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="penalty weight for the volume budget")
    parser.add_argument("--theta", type=float, default=None,
                        help="per-element updater cap")
    parser.add_argument("--theta-s", dest="theta_s", type=float, default=None,
                        help="slack scaling factor")
    parser.add_argument("--rho0", type=float, default=None,
                        help="initial design variable")
    parser.add_argument("--v-target", dest="v_target", type=float, default=None,
                        help="volume fraction target (defaults to the problem's)")
    parser.add_argument("--nq", type=int, default=1, help="qubits per element")
    parser.add_argument("--ns", type=int, default=1, help="slack qubits")
    parser.add_argument("--max-iters", type=int, default=200)
    parser.add_argument("--sweeps", type=int, default=SaParams.sweeps)
    parser.add_argument("--restarts", type=int, default=SaParams.restarts)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="annealtopt",
        description="Topology optimization with annealing-based design updates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the annealing optimization")
    _add_problem_options(p_run)
    p_run.add_argument("--out", required=True, help="output directory")

    p_oc = sub.add_parser("oc", help="run the optimality-criteria baseline")
    p_oc.add_argument("--problem", required=True)
    p_oc.add_argument("--v-target", dest="v_target", type=float, required=True)
    p_oc.add_argument("--out", required=True)
    p_oc.add_argument("--move", type=float, default=OcParams.move)
    p_oc.add_argument("--eta", type=float, default=OcParams.damping)
    p_oc.add_argument("--max-iters", type=int, default=OcParams.max_iterations)

    p_exp = sub.add_parser("export-qubo",
                           help="write the first-iteration cost function")
    _add_problem_options(p_exp, with_solver=False)
    p_exp.add_argument("--iteration", type=int, default=0,
                       help="only iteration 0 (the initial design) is supported")
    p_exp.add_argument("--out", required=True, help="output file")

    p_bench = sub.add_parser("bench", help="seeded benchmark sweep")
    p_bench.add_argument("--suite", required=True)
    p_bench.add_argument("--seeds", type=int, default=1)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--solver", choices=("sa", "exhaustive"), default="sa")
    p_bench.add_argument("--max-iters", type=int, default=200)
    return parser


def cmd_run(args):
    problem, defaults, label = _resolve_problem(args.problem)
    config = _run_config(args, defaults)
    writer = output.BundleWriter(args.out, problem)
    try:
        result = run_annealing_optimization(
            problem, config, on_iteration=writer.on_iteration
        )
    except OptimizationError as exc:
        output.write_convergence_csv(
            os.path.join(args.out, "convergence.csv"), exc.history
        )
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    summary = output.run_summary(problem, result, extra={
        "problem": label,
        "seed": args.seed,
        "lam": config.lam,
        "rho0": config.rho0,
        "theta_e": config.theta_e,
        "theta_s": config.theta_s,
    })
    if config.v_target is not None:
        summary["v_target"] = config.v_target
    writer.finalize(result, summary)
    print(f"{label}: {result.iterations} iterations, "
          f"objective {result.final_objective:.6g}, "
          f"volume {result.final_volume_ratio:.4f}, "
          f"N_q = {result.n_qubits}, converged = {result.converged}")
    return EXIT_OK


def cmd_oc(args):
    problem, _, label = _resolve_problem(args.problem)
    params = OcParams(move=args.move, damping=args.eta,
                      max_iterations=args.max_iters)
    writer = output.BundleWriter(args.out, problem)
    try:
        result = run_oc(problem, params, v_target=args.v_target)
    except (OcError, fem.FemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    summary = output.run_summary(problem, result, extra={
        "problem": label, "v_target": args.v_target,
    })
    writer.finalize(result, summary)
    print(f"{label}: oc, {result.iterations} iterations, "
          f"objective {result.final_objective:.6g}, "
          f"volume {result.final_volume_ratio:.4f}")
    return EXIT_OK


def cmd_export_qubo(args):
    if args.iteration != 0:
        print("error: only --iteration 0 is supported", file=sys.stderr)
        return EXIT_INVALID
    problem, defaults, _ = _resolve_problem(args.problem)
    config = _run_config(args, defaults, solver="sa")
    v_target = problem.v_target if config.v_target is None else config.v_target
    state = init_design(problem.n_elem, config.rho0, config.theta_e)
    _, _, se, _ = fem.solve_problem(problem, state.rho)
    layout = make_layout(problem.n_elem, config.n_q, config.n_s)
    q = build_qubo(problem, state, se, config.lam, config.theta_s, v_target, layout)
    write_exchange(q, args.out)
    print(f"wrote {args.out}: n = {layout.n_qubits}")
    return EXIT_OK


def cmd_bench(args):
    names = BENCH_SUITES.get(args.suite)
    if not names:
        known = ", ".join(sorted(BENCH_SUITES))
        print(f"error: unknown suite '{args.suite}' (choose from {known})",
              file=sys.stderr)
        return EXIT_INVALID
    os.makedirs(args.out, exist_ok=True)
    rows = []
    any_ok = False
    for name in names:
        problem = model.build_benchmark(name)
        params = model.BENCHMARK_PARAMS[name]
        objs, vols, iters, tfss = [], [], [], []
        error = None
        for seed in range(args.seeds):
            config = RunConfig(
                lam=params["lam"], rho0=params["rho0"],
                theta_e=params["theta_e"], theta_s=params["theta_s"],
                solver=args.solver, seed=seed,
                max_iterations=args.max_iters,
            )
            out_dir = os.path.join(args.out, f"{name}_{args.solver}_seed{seed}")
            writer = output.BundleWriter(out_dir, problem)
            try:
                result = run_annealing_optimization(
                    problem, config, on_iteration=writer.on_iteration
                )
            except OptimizationError as exc:
                error = str(exc)
                break
            writer.finalize(result, output.run_summary(problem, result, extra={
                "problem": name, "seed": seed,
            }))
            objs.append(result.final_objective)
            vols.append(result.final_volume_ratio)
            iters.append(result.iterations)
            tfss.append(result.tfs_s)
        if error is None and objs:
            any_ok = True
            rows.append((name, args.solver, sum(objs) / len(objs), min(objs),
                         sum(vols) / len(vols), sum(iters) / len(iters),
                         sum(tfss) / len(tfss)))
        else:
            rows.append((name, args.solver, error or "no runs"))

        out_dir = os.path.join(args.out, f"{name}_oc")
        writer = output.BundleWriter(out_dir, problem)
        try:
            result = run_oc(problem, OcParams(max_iterations=args.max_iters))
        except (OcError, fem.FemError) as exc:
            rows.append((name, "oc", str(exc)))
            continue
        writer.finalize(result, output.run_summary(problem, result, extra={
            "problem": name,
        }))
        any_ok = True
        rows.append((name, "oc", result.final_objective, result.final_objective,
                     result.final_volume_ratio, float(result.iterations),
                     result.tfs_s))

    header = f"{'benchmark':<18}{'method':<8}{'mean_fobj':>14}{'best_fobj':>14}" \
             f"{'mean_vol':>10}{'mean_iters':>12}{'mean_tfs_s':>12}"
    lines = [header]
    for row in rows:
        if len(row) == 3:
            lines.append(f"{row[0]:<18}{row[1]:<8}FAILED: {row[2]}")
        else:
            name, method, mean_f, best_f, vol, its, tfs_s = row
            lines.append(f"{name:<18}{method:<8}{mean_f:>14.6g}{best_f:>14.6g}"
                         f"{vol:>10.4f}{its:>12.1f}{tfs_s:>12.4g}")
    table = "\n".join(lines)
    with open(os.path.join(args.out, "bench_summary.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(table + "\n")
    print(table)
    return EXIT_OK if any_ok else EXIT_FAILED


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run,
        "oc": cmd_oc,
        "export-qubo": cmd_export_qubo,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except InvalidProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolveError, OcError, fem.FemError, OptimizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
