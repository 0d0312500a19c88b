"""Robust budget allocation from lift studies.

Solves allocation games of the form  max over decisions c  of  min over
rates beta in a confidence region  of  c @ A @ beta,  where A maps
conversion rates to per-unit incremental outcomes. Ships an ADMM solver
built on exact generalized projections, gradient-based and closed-form
baselines, a worst-case/expected tradeoff sweep, and a CLI around JSON
problem files with CSV traces and rendered figures.
"""

from .decision import DecisionSpace, ExpectedOutcomeFloor, best_response_value, naive_optimal
from .model import (
    ChannelData,
    LiftStudy,
    OutcomeMatrix,
    build_outcome_matrix,
    chi2_cdf,
    chi2_quantile,
    expected_outcome,
    log_likelihood,
    mle,
)
from .pareto import ParetoPoint, default_floor_grid, sweep
from .problems import (
    Problem,
    ProblemFormatError,
    RegionSpec,
    SolverSpec,
    fisher_ellipsoid,
    generate_lift_study,
    load_problem,
    save_problem,
)
from .regions import (
    BarrierConfig,
    BinomialLikelihoodRegion,
    Ellipsoid,
    RegionSolveError,
    contains,
    generalized_projection,
    worst_case_params,
)
from .solvers import (
    AdmmConfig,
    IterateTrace,
    SolveResult,
    admm_solve,
    apg_solve,
    duality_gap,
    markowitz_solve,
    prox_step,
    subgradient_solve,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "BarrierConfig",
    "BinomialLikelihoodRegion",
    "ChannelData",
    "DecisionSpace",
    "Ellipsoid",
    "ExpectedOutcomeFloor",
    "IterateTrace",
    "LiftStudy",
    "OutcomeMatrix",
    "ParetoPoint",
    "Problem",
    "ProblemFormatError",
    "RegionSolveError",
    "RegionSpec",
    "SolveResult",
    "SolverSpec",
    "admm_solve",
    "apg_solve",
    "best_response_value",
    "build_outcome_matrix",
    "chi2_cdf",
    "chi2_quantile",
    "contains",
    "default_floor_grid",
    "duality_gap",
    "expected_outcome",
    "fisher_ellipsoid",
    "generate_lift_study",
    "generalized_projection",
    "load_problem",
    "log_likelihood",
    "markowitz_solve",
    "mle",
    "naive_optimal",
    "prox_step",
    "save_problem",
    "subgradient_solve",
    "sweep",
    "worst_case_params",
]
