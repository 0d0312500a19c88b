"""Problem-file schema, builders, and a portable synthetic study generator."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .model import ChannelData, LiftStudy, chi2_quantile, mle
from .regions import BinomialLikelihoodRegion, Ellipsoid
from .solvers import AdmmConfig

__all__ = [
    "SCHEMA_VERSION",
    "ProblemFormatError",
    "RegionSpec",
    "SolverSpec",
    "Problem",
    "parse_problem",
    "problem_to_dict",
    "load_problem",
    "save_problem",
    "build_region",
    "build_config",
    "fisher_ellipsoid",
    "SplitMix64",
    "generate_lift_study",
]

SCHEMA_VERSION = 1

REGION_KINDS = ("binomial-lr", "ellipsoid")
SOLVER_NAMES = ("admm", "apg", "subgradient", "markowitz")


class ProblemFormatError(ValueError):
    """A problem file failed schema validation."""


@dataclass(frozen=True)
class RegionSpec:
    """Which confidence region to build: a kind plus level or explicit shape."""

    kind: str = "binomial-lr"
    alpha: float = 0.05
    shape: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in REGION_KINDS:
            raise ProblemFormatError(f"unknown region kind {self.kind!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ProblemFormatError("alpha must lie in (0, 1)")
        if self.shape is not None:
            if self.kind != "ellipsoid":
                raise ProblemFormatError("an explicit shape matrix needs kind 'ellipsoid'")
            object.__setattr__(
                self, "shape", tuple(tuple(float(v) for v in row) for row in self.shape))


@dataclass(frozen=True)
class SolverSpec:
    """Solver choice plus optional config overrides (None keeps the default)."""

    name: str = "admm"
    rho: float | None = None
    eps_abs: float | None = None
    eps_rel: float | None = None
    max_iterations: int | None = None
    trace_gap: bool | None = None

    def __post_init__(self) -> None:
        if self.name not in SOLVER_NAMES:
            raise ProblemFormatError(f"unknown solver {self.name!r}")


@dataclass(frozen=True)
class Problem:
    """In-memory form of a problem file."""

    study: LiftStudy
    region: RegionSpec = RegionSpec()
    solver: SolverSpec = SolverSpec()
    pareto_grid: tuple[float, ...] | None = None
    seed: int | None = None


def _require_keys(mapping: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ProblemFormatError(f"unknown fields in {where}: {sorted(unknown)}")
    missing = required - set(mapping)
    if missing:
        raise ProblemFormatError(f"missing fields in {where}: {sorted(missing)}")


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFormatError(f"{where} must be a number")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProblemFormatError(f"{where} must be an integer")
    return value


def parse_problem(data: dict) -> Problem:
    """Validate a decoded problem mapping; unknown fields are rejected."""
    if not isinstance(data, dict):
        raise ProblemFormatError("problem file must hold a JSON object")
    _require_keys(data, {"schema_version", "study", "region", "solver", "pareto", "seed"},
                  {"schema_version", "study", "region"}, "problem")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ProblemFormatError(f"unsupported schema_version {data['schema_version']!r}")

    study_data = data["study"]
    if not isinstance(study_data, dict):
        raise ProblemFormatError("study must be an object")
    _require_keys(study_data, {"budget", "channels"}, {"budget", "channels"}, "study")
    channels_data = study_data["channels"]
    if not isinstance(channels_data, list) or not channels_data:
        raise ProblemFormatError("study.channels must be a nonempty list")
    channels = []
    for idx, ch in enumerate(channels_data):
        where = f"study.channels[{idx}]"
        if not isinstance(ch, dict):
            raise ProblemFormatError(f"{where} must be an object")
        keys = {"trials_holdout", "successes_holdout", "trials_marketing",
                "successes_marketing", "cost"}
        _require_keys(ch, keys, keys, where)
        try:
            channels.append(ChannelData(
                trials_holdout=_as_int(ch["trials_holdout"], f"{where}.trials_holdout"),
                successes_holdout=_as_int(ch["successes_holdout"], f"{where}.successes_holdout"),
                trials_marketing=_as_int(ch["trials_marketing"], f"{where}.trials_marketing"),
                successes_marketing=_as_int(ch["successes_marketing"],
                                            f"{where}.successes_marketing"),
                cost=_as_number(ch["cost"], f"{where}.cost"),
            ))
        except ValueError as err:
            raise ProblemFormatError(f"{where}: {err}") from None
    try:
        study = LiftStudy(tuple(channels), _as_number(study_data["budget"], "study.budget"))
    except ValueError as err:
        raise ProblemFormatError(f"study: {err}") from None

    region_data = data["region"]
    if not isinstance(region_data, dict):
        raise ProblemFormatError("region must be an object")
    _require_keys(region_data, {"kind", "alpha", "shape"}, {"kind"}, "region")
    shape = None
    if "shape" in region_data:
        raw = region_data["shape"]
        if (not isinstance(raw, list) or not raw
                or any(not isinstance(row, list) for row in raw)):
            raise ProblemFormatError("region.shape must be a matrix as nested lists")
        shape = tuple(tuple(_as_number(v, "region.shape entry") for v in row) for row in raw)
        if any(len(row) != len(shape) for row in shape) or len(shape) != 2 * study.n:
            raise ProblemFormatError(f"region.shape must be {2 * study.n} x {2 * study.n}")
    region = RegionSpec(
        kind=region_data["kind"],
        alpha=_as_number(region_data.get("alpha", 0.05), "region.alpha"),
        shape=shape,
    )

    solver = SolverSpec()
    if "solver" in data:
        solver_data = data["solver"]
        if not isinstance(solver_data, dict):
            raise ProblemFormatError("solver must be an object")
        _require_keys(solver_data, {"name", "rho", "eps_abs", "eps_rel", "max_iterations",
                                    "trace_gap"}, {"name"}, "solver")
        trace_gap = solver_data.get("trace_gap")
        if trace_gap is not None and not isinstance(trace_gap, bool):
            raise ProblemFormatError("solver.trace_gap must be a boolean")
        solver = SolverSpec(
            name=solver_data["name"],
            rho=None if "rho" not in solver_data
            else _as_number(solver_data["rho"], "solver.rho"),
            eps_abs=None if "eps_abs" not in solver_data
            else _as_number(solver_data["eps_abs"], "solver.eps_abs"),
            eps_rel=None if "eps_rel" not in solver_data
            else _as_number(solver_data["eps_rel"], "solver.eps_rel"),
            max_iterations=None if "max_iterations" not in solver_data
            else _as_int(solver_data["max_iterations"], "solver.max_iterations"),
            trace_gap=trace_gap,
        )

    pareto_grid = None
    if "pareto" in data:
        pareto_data = data["pareto"]
        if not isinstance(pareto_data, dict):
            raise ProblemFormatError("pareto must be an object")
        _require_keys(pareto_data, {"grid"}, {"grid"}, "pareto")
        raw_grid = pareto_data["grid"]
        if not isinstance(raw_grid, list) or not raw_grid:
            raise ProblemFormatError("pareto.grid must be a nonempty list")
        pareto_grid = tuple(_as_number(v, "pareto.grid entry") for v in raw_grid)
        if any(b > a + 1e-12 for a, b in zip(pareto_grid, pareto_grid[1:])):
            raise ProblemFormatError("pareto.grid must be descending")

    seed = None
    if "seed" in data and data["seed"] is not None:
        seed = _as_int(data["seed"], "seed")

    return Problem(study=study, region=region, solver=solver,
                   pareto_grid=pareto_grid, seed=seed)


def problem_to_dict(problem: Problem) -> dict:
    data: dict = {
        "schema_version": SCHEMA_VERSION,
        "study": {
            "budget": problem.study.budget,
            "channels": [
                {
                    "trials_holdout": ch.trials_holdout,
                    "successes_holdout": ch.successes_holdout,
                    "trials_marketing": ch.trials_marketing,
                    "successes_marketing": ch.successes_marketing,
                    "cost": ch.cost,
                }
                for ch in problem.study.channels
            ],
        },
        "region": {"kind": problem.region.kind, "alpha": problem.region.alpha},
        "solver": {"name": problem.solver.name},
    }
    if problem.region.shape is not None:
        data["region"]["shape"] = [list(row) for row in problem.region.shape]
    for key in ("rho", "eps_abs", "eps_rel", "max_iterations", "trace_gap"):
        value = getattr(problem.solver, key)
        if value is not None:
            data["solver"][key] = value
    if problem.pareto_grid is not None:
        data["pareto"] = {"grid": list(problem.pareto_grid)}
    if problem.seed is not None:
        data["seed"] = problem.seed
    return data


def load_problem(path) -> Problem:
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ProblemFormatError(f"invalid JSON: {err}") from None
    return parse_problem(data)


def save_problem(path, problem: Problem) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=2, sort_keys=True) + "\n")


def fisher_ellipsoid(study: LiftStudy, alpha: float = 0.05) -> Ellipsoid:
    """Default ellipsoid: inverse binomial variances scaled by a chi-square radius.

    The diagonal shape uses smoothed rates (s + 1/2) / (t + 1) so that
    degenerate groups keep a finite curvature; the center stays at the plain
    maximum-likelihood rates. This is a documented modeling choice, not the
    only reasonable one.
    """
    smoothed = (study.successes + 0.5) / (study.trials + 1.0)
    information = study.trials / (smoothed * (1.0 - smoothed))
    radius = chi2_quantile(1.0 - alpha, 2 * study.n)
    return Ellipsoid(center=mle(study), shape=np.diag(information / radius))


def build_region(problem: Problem):
    """Construct the region object a problem file describes."""
    spec = problem.region
    if spec.kind == "binomial-lr":
        return BinomialLikelihoodRegion.from_study(problem.study, alpha=spec.alpha)
    if spec.shape is not None:
        return Ellipsoid(center=mle(problem.study), shape=np.array(spec.shape, dtype=float))
    return fisher_ellipsoid(problem.study, alpha=spec.alpha)


def build_config(spec: SolverSpec, trace_gap: bool | None = None) -> AdmmConfig:
    """AdmmConfig from a solver spec; ``trace_gap`` forces tracing on/off."""
    config = AdmmConfig()
    overrides = {k: v for k, v in (
        ("rho", spec.rho),
        ("eps_abs", spec.eps_abs),
        ("eps_rel", spec.eps_rel),
        ("max_iterations", spec.max_iterations),
        ("trace_gap", spec.trace_gap),
    ) if v is not None}
    if trace_gap is not None:
        overrides["trace_gap"] = trace_gap
    return replace(config, **overrides)


class SplitMix64:
    """Tiny portable 64-bit PRNG (fixed, documented constants).

    Chosen over a platform RNG so that a committed seed regenerates the same
    study everywhere. Uniform doubles take the top 53 bits of each output.
    """

    _MASK = 0xFFFFFFFFFFFFFFFF

    def __init__(self, seed: int):
        self._state = seed & self._MASK

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & self._MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return (z ^ (z >> 31)) & self._MASK

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_uint64() >> 11) * 2.0**-53
        return low + (high - low) * u

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], inclusive."""
        return min(low + int(self.uniform() * (high - low + 1)), high)

    def binomial(self, trials: int, rate: float) -> int:
        """Direct Bernoulli summation; exact and portable for modest trials."""
        return sum(1 for _ in range(trials) if self.uniform() < rate)


def generate_lift_study(seed: int, n: int, trial_range: tuple[int, int] = (200, 500),
                        budget: float = 1.0) -> LiftStudy:
    """Synthesize a lift study with n channels, deterministically from a seed.

    Per channel, in a fixed draw order: holdout and marketing trial counts
    uniform over ``trial_range``; a holdout conversion rate in [0.01, 0.10];
    an uplift in [-0.01, 0.05] added to get the marketing rate; a cost in
    [0.5, 2.0]; then binomially sampled success counts for both groups.
    """
    low, high = trial_range
    if n < 1:
        raise ValueError("need at least one channel")
    if not (0 < low <= high):
        raise ValueError("trial range must satisfy 0 < low <= high")
    rng = SplitMix64(seed)
    channels = []
    for _ in range(n):
        trials_holdout = rng.integer(low, high)
        trials_marketing = rng.integer(low, high)
        rate_holdout = rng.uniform(0.01, 0.10)
        uplift = rng.uniform(-0.01, 0.05)
        rate_marketing = min(max(rate_holdout + uplift, 0.0), 1.0)
        cost = rng.uniform(0.5, 2.0)
        channels.append(ChannelData(
            trials_holdout=trials_holdout,
            successes_holdout=rng.binomial(trials_holdout, rate_holdout),
            trials_marketing=trials_marketing,
            successes_marketing=rng.binomial(trials_marketing, rate_marketing),
            cost=cost,
        ))
    return LiftStudy(tuple(channels), budget)
