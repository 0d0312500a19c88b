"""Command line: generate studies, run solvers, sweep the tradeoff frontier."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .model import build_outcome_matrix
from .pareto import default_floor_grid, sweep
from .problems import (
    Problem,
    ProblemFormatError,
    RegionSpec,
    SolverSpec,
    build_config,
    build_region,
    generate_lift_study,
    load_problem,
    problem_to_dict,
    save_problem,
)
from .regions import Ellipsoid
from .solvers import (
    STATUS_CONVERGED,
    admm_solve,
    apg_solve,
    markowitz_solve,
    subgradient_solve,
)
from .decision import DecisionSpace

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_IO = 3
EXIT_SOLVER = 4

_ITERATIVE_SOLVERS = {
    "admm": admm_solve,
    "apg": apg_solve,
    "subgradient": subgradient_solve,
}


class SolverFailure(RuntimeError):
    pass


def _build_instances(problem: Problem):
    matrix = build_outcome_matrix(problem.study)
    region = build_region(problem)
    space = DecisionSpace(problem.study.n, problem.study.budget)
    return matrix, region, space


def _run_solver(name: str, matrix, region, space, config):
    """Run one solver; returns (result, trace-or-None, error-or-None)."""
    if name == "markowitz":
        if not isinstance(region, Ellipsoid):
            return None, None, "region not ellipsoidal"
        try:
            return markowitz_solve(matrix, region, space), None, None
        except ValueError as err:
            return None, None, str(err)
    solve = _ITERATIVE_SOLVERS[name]
    result, trace = solve(matrix, region, space, config)
    error = None if result.status == STATUS_CONVERGED else result.status
    return result, trace, error


def _result_summary(name: str, result, error) -> dict:
    if result is None:
        return {"solver": name, "error": error}
    summary = {
        "solver": name,
        "status": result.status,
        "iterations": result.iterations,
        "robust_value": result.robust_value,
        "expected_value": result.expected_value,
        "decision": [float(v) for v in result.decision],
    }
    if error is not None:
        summary["error"] = error
    return summary


def _print_summary(summary: dict) -> None:
    if "status" not in summary:
        print(f"{summary['solver']}: error: {summary['error']}")
        return
    print(f"{summary['solver']}: status={summary['status']} "
          f"iterations={summary['iterations']} "
          f"robust={summary['robust_value']:.6g} "
          f"expected={summary['expected_value']:.6g}")
    print(f"  decision={np.array2string(np.asarray(summary['decision']), precision=6)}")


def run_experiment(problem: Problem, solvers: list[str], out_dir,
                   render: bool = True) -> dict:
    """Run each solver on the identical problem with gap tracing enabled.

    Writes one trace CSV per iterative solver, a JSON summary, and a
    convergence figure into ``out_dir``; returns the summary mapping.
    """
    from .report import render_convergence_figure, write_trace_csv

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix, region, space = _build_instances(problem)
    config = build_config(problem.solver, trace_gap=True)
    summaries = []
    traces = []
    for name in solvers:
        result, trace, error = _run_solver(name, matrix, region, space, config)
        summaries.append(_result_summary(name, result, error))
        if trace is not None and len(trace):
            write_trace_csv(out_dir / f"trace_{name}.csv", trace)
            traces.append(trace)
    summary = {"solvers": summaries}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if render and traces:
        render_convergence_figure(traces, out_dir / "convergence.png")
    return summary


def _apply_overrides(problem: Problem, args) -> Problem:
    solver = problem.solver
    region = problem.region
    if getattr(args, "solver", None):
        solver = dataclasses.replace(solver, name=args.solver)
    if getattr(args, "rho", None) is not None:
        solver = dataclasses.replace(solver, rho=args.rho)
    if getattr(args, "alpha", None) is not None:
        region = dataclasses.replace(region, alpha=args.alpha)
    return dataclasses.replace(problem, solver=solver, region=region)


def _cmd_solve(args) -> int:
    problem = _apply_overrides(load_problem(args.problem), args)
    matrix, region, space = _build_instances(problem)
    config = build_config(problem.solver, trace_gap=True if args.trace else None)
    result, trace, error = _run_solver(problem.solver.name, matrix, region, space, config)
    summary = _result_summary(problem.solver.name, result, error)
    _print_summary(summary)
    if args.trace and trace is not None:
        from .report import render_convergence_figure, write_trace_csv

        trace_path = Path(args.trace)
        write_trace_csv(trace_path, trace)
        render_convergence_figure([trace], trace_path.with_suffix(".png"))
    if error is not None and args.strict:
        raise SolverFailure(error)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    problem = _apply_overrides(load_problem(args.problem), args)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for name in solvers:
        if name not in (*_ITERATIVE_SOLVERS, "markowitz"):
            raise ProblemFormatError(f"unknown solver {name!r}")
    summary = run_experiment(problem, solvers, args.out_dir)
    for entry in summary["solvers"]:
        _print_summary(entry)
    failures = [s for s in summary["solvers"] if s.get("error")]
    if failures and args.strict:
        raise SolverFailure(failures[0]["error"])
    return EXIT_OK


def _cmd_pareto(args) -> int:
    from .report import render_frontier_figure, write_frontier_csv

    problem = _apply_overrides(load_problem(args.problem), args)
    matrix, region, space = _build_instances(problem)
    config = build_config(problem.solver)
    if args.grid is not None:
        grid = default_floor_grid(matrix, region, space, config, count=args.grid)
    elif problem.pareto_grid is not None:
        grid = np.asarray(problem.pareto_grid)
    else:
        grid = default_floor_grid(matrix, region, space, config)
    points = sweep(matrix, region, space, grid, config)
    out = Path(args.out)
    write_frontier_csv(out, points)
    render_frontier_figure(points, out.with_suffix(".png"))
    for pt in points:
        print(f"phi={pt.floor_value:.6g} robust={pt.robust_value:.6g} "
              f"expected={pt.expected_value:.6g} iterations={pt.iterations} "
              f"status={pt.status}")
    failures = [pt for pt in points if pt.status != STATUS_CONVERGED]
    if failures and args.strict:
        raise SolverFailure(f"{len(failures)} sweep points did not converge")
    return EXIT_OK


def _parse_trial_range(text: str) -> tuple[int, int]:
    try:
        low, high = (int(part) for part in text.split(":"))
    except ValueError:
        raise ProblemFormatError("trial range must look like LOW:HIGH") from None
    if not (0 < low <= high):
        raise ProblemFormatError("trial range must satisfy 0 < low <= high")
    return low, high


def _cmd_generate(args) -> int:
    low, high = _parse_trial_range(args.trials)
    study = generate_lift_study(args.seed, args.channels, (low, high))
    problem = Problem(study=study, region=RegionSpec(), solver=SolverSpec(),
                      seed=args.seed)
    save_problem(args.out, problem)
    print(f"wrote {args.channels}-channel study to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustlift",
        description="Robust budget allocation from lift studies.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one solver on a problem file")
    solve.add_argument("--problem", required=True)
    solve.add_argument("--solver", choices=(*_ITERATIVE_SOLVERS, "markowitz"))
    solve.add_argument("--rho", type=float)
    solve.add_argument("--alpha", type=float)
    solve.add_argument("--trace", help="write the iterate trace CSV (figure alongside)")
    solve.add_argument("--strict", action="store_true",
                       help="exit nonzero on solver failure")
    solve.set_defaults(handler=_cmd_solve)

    experiment = sub.add_parser("experiment",
                                help="run several solvers with gap tracing")
    experiment.add_argument("--problem", required=True)
    experiment.add_argument("--solvers", default="admm,apg,subgradient")
    experiment.add_argument("--out-dir", required=True)
    experiment.add_argument("--alpha", type=float)
    experiment.add_argument("--rho", type=float)
    experiment.add_argument("--strict", action="store_true")
    experiment.set_defaults(handler=_cmd_experiment)

    pareto = sub.add_parser("pareto", help="trace the worst-case/expected frontier")
    pareto.add_argument("--problem", required=True)
    pareto.add_argument("--grid", type=int, help="number of evenly spaced floor values")
    pareto.add_argument("--out", default="frontier.csv")
    pareto.add_argument("--alpha", type=float)
    pareto.add_argument("--rho", type=float)
    pareto.add_argument("--strict", action="store_true")
    pareto.set_defaults(handler=_cmd_pareto)

    generate = sub.add_parser("generate", help="synthesize a lift-study problem file")
    generate.add_argument("--seed", type=int, required=True)
    generate.add_argument("--channels", type=int, required=True)
    generate.add_argument("--trials", default="200:500")
    generate.add_argument("--out", required=True)
    generate.set_defaults(handler=_cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ProblemFormatError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except SolverFailure as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
