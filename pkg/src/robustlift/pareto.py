"""Tradeoff sweep between worst-case and expected outcomes.

Each point maximizes the worst-case outcome subject to a floor on the
expected outcome; sweeping the floor downward from its largest feasible
value traces the whole frontier, warm-starting each solve from the previous
solution (which stays feasible as the floor drops).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decision import DecisionSpace, best_response_value, naive_optimal
from .solvers import AdmmConfig, admm_solve

__all__ = ["ParetoPoint", "sweep", "default_floor_grid"]

STATUS_INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class ParetoPoint:
    """One frontier point: the floor, the decision, and both objective values."""

    floor_value: float
    decision: np.ndarray
    robust_value: float
    expected_value: float
    iterations: int
    warm_started: bool
    status: str


def sweep(a, region, space: DecisionSpace, floor_grid, config: AdmmConfig | None = None,
          warm_start: bool = True) -> list[ParetoPoint]:
    """Solve the floored problem for each value in a descending floor grid.

    The first solve starts from the best-expected-outcome allocation; later
    solves chain from the previous solution when ``warm_start`` is set.
    Floors above the largest feasible value are reported as infeasible
    points, and per-point solver failures are recorded without aborting the
    sweep.
    """
    if space.floor is not None:
        raise ValueError("sweep expects the base space without a floor")
    mat = np.asarray(a, dtype=float)
    grid = np.asarray(floor_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("floor grid must be a nonempty vector")
    if np.any(np.diff(grid) > 1e-12):
        raise ValueError("floor grid must be descending")
    beta_hat = region.beta_hat
    top, _ = best_response_value(space, beta_hat, mat)
    start = (naive_optimal(space, beta_hat, mat), np.asarray(beta_hat, dtype=float))
    points: list[ParetoPoint] = []
    chained = False
    for phi in grid:
        if phi > top + 1e-9:
            points.append(ParetoPoint(float(phi), np.full(space.n, math.nan), math.nan,
                                      math.nan, 0, False, STATUS_INFEASIBLE))
            continue
        floored = space.with_floor(mat, beta_hat, float(phi))
        init = start if (chained or not points) else None
        if not warm_start and points:
            init = None
        result, _ = admm_solve(mat, region, floored, config, init=init)
        points.append(ParetoPoint(
            floor_value=float(phi),
            decision=result.decision,
            robust_value=result.robust_value,
            expected_value=result.expected_value,
            iterations=result.iterations,
            warm_started=bool(init is not None and points),
            status=result.status,
        ))
        if math.isfinite(result.robust_value):
            start = (result.decision, result.worst_case)
            chained = warm_start
    return points


def default_floor_grid(a, region, space: DecisionSpace, config: AdmmConfig | None = None,
                       count: int = 11) -> np.ndarray:
    """Evenly spaced floors from the best expected outcome down to the
    expected outcome of the unconstrained robust solution."""
    if count < 2:
        raise ValueError("grid needs at least two points")
    mat = np.asarray(a, dtype=float)
    top, _ = best_response_value(space.without_floor(), region.beta_hat, mat)
    unconstrained, _ = admm_solve(mat, region, space.without_floor(), config)
    return np.linspace(top, unconstrained.expected_value, count)
