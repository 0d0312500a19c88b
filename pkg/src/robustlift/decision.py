"""The decision space: a budget simplex, optionally cut by an outcome floor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DecisionSpace",
    "ExpectedOutcomeFloor",
    "best_response_value",
    "naive_optimal",
]


@dataclass(frozen=True, eq=False)
class ExpectedOutcomeFloor:
    """Half-space {c : direction @ c >= minimum} keeping the expected outcome up."""

    direction: np.ndarray
    minimum: float

    def __post_init__(self) -> None:
        direction = np.atleast_1d(np.asarray(self.direction, dtype=float)).copy()
        direction.flags.writeable = False
        object.__setattr__(self, "direction", direction)


@dataclass(frozen=True, eq=False)
class DecisionSpace:
    """Allocations {c : c >= 0, sum(c) <= budget}, optionally with a floor.

    The floor half-space encodes a minimum acceptable expected outcome; a
    space is rejected at construction if the floor empties it.
    """

    n: int
    budget: float
    floor: ExpectedOutcomeFloor | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("need at least one channel")
        if not self.budget > 0:
            raise ValueError("budget must be positive")
        if self.floor is not None:
            if self.floor.direction.shape != (self.n,):
                raise ValueError("floor direction must have one entry per channel")
            best, _ = _best_response(self.floor.direction, self.budget)
            if best < self.floor.minimum - 1e-12:
                raise ValueError("floor makes the decision space empty")

    def with_floor(self, a, beta_hat, minimum: float) -> "DecisionSpace":
        """Intersect with {c : c @ A @ beta_hat >= minimum}."""
        direction = np.asarray(a, dtype=float) @ np.asarray(beta_hat, dtype=float)
        return DecisionSpace(self.n, self.budget, ExpectedOutcomeFloor(direction, minimum))

    def without_floor(self) -> "DecisionSpace":
        if self.floor is None:
            return self
        return DecisionSpace(self.n, self.budget)

    def contains(self, c, slack: float = 1e-8) -> bool:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n,):
            raise ValueError(f"decision must have length {self.n}")
        if np.any(c < -slack) or c.sum() > self.budget + slack:
            return False
        if self.floor is not None:
            return float(self.floor.direction @ c) >= self.floor.minimum - max(slack, 1e-8)
        return True

    def project(self, x) -> np.ndarray:
        """Euclidean projection onto the space (exact; Dykstra when floored)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"point must have length {self.n}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point must be finite")
        if self.floor is None:
            return _project_budget_set(x, self.budget)
        return _dykstra(x, self.budget, self.floor.direction, self.floor.minimum)


def _project_budget_set(x: np.ndarray, budget: float) -> np.ndarray:
    """Projection onto {c >= 0, sum(c) <= budget} by clip or water-filling."""
    clipped = np.maximum(x, 0.0)
    if clipped.sum() <= budget:
        return clipped
    # sum constraint active: project onto {c >= 0, sum(c) = budget}
    u = np.sort(x)[::-1]
    excess = np.cumsum(u) - budget
    counts = np.arange(1, x.size + 1)
    k = int(np.nonzero(u - excess / counts > 0)[0].max())
    theta = excess[k] / (k + 1)
    return np.maximum(x - theta, 0.0)


def _project_halfspace(x: np.ndarray, direction: np.ndarray, minimum: float) -> np.ndarray:
    value = float(direction @ x)
    if value >= minimum:
        return x
    norm_sq = float(direction @ direction)
    if norm_sq == 0.0:
        return x
    return x + ((minimum - value) / norm_sq) * direction


def _dykstra(x, budget, direction, minimum, tol=1e-10, max_sweeps=10000):
    """Dykstra's alternating projections onto floor half-space and budget set.

    The budget projection runs last in each sweep so the returned point is
    exactly budget-feasible; the floor is met up to the movement tolerance.
    """
    a = x.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    prev = a.copy()
    for _ in range(max_sweeps):
        y = _project_halfspace(a + p, direction, minimum)
        p = a + p - y
        a = _project_budget_set(y + q, budget)
        q = y + q - a
        # both projection outputs converge to the intersection projection;
        # they must agree before small movement means convergence
        if np.linalg.norm(a - prev) < tol and np.linalg.norm(y - a) < tol:
            break
        prev = a.copy()
    return a


def _best_response(gains: np.ndarray, budget: float) -> tuple[float, np.ndarray]:
    c = np.zeros_like(gains)
    i = int(np.argmax(gains))
    if gains[i] > 0.0:
        c[i] = budget
        return budget * float(gains[i]), c
    return 0.0, c


def best_response_value(space: DecisionSpace, beta, a) -> tuple[float, np.ndarray]:
    """Best attainable outcome at fixed rates, sup over the budget simplex.

    Puts the whole budget on the channel with the largest positive per-unit
    gain (ties to the lowest index) or spends nothing when every gain is
    nonpositive. Only defined for spaces without a floor.
    """
    if space.floor is not None:
        raise ValueError("best response is defined on the space without a floor")
    gains = np.asarray(a, dtype=float) @ np.asarray(beta, dtype=float)
    if gains.shape != (space.n,):
        raise ValueError("dimension mismatch between matrix and space")
    value, c = _best_response(gains, space.budget)
    return value, c


def naive_optimal(space: DecisionSpace, beta_hat, a) -> np.ndarray:
    """Allocation maximizing the outcome at the point estimate."""
    _, c = best_response_value(space, beta_hat, a)
    return c
