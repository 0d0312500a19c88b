"""Confidence regions over conversion rates and their solve primitives.

Every solver in this package needs three things from a region S: membership
testing, minimization of a linear functional over S (the worst-case rates for
a fixed allocation), and a generalized projection, i.e. minimizing
``||M @ beta - w||^2`` over S for a linear map M. Two region kinds are
provided: an ellipsoid around the point estimate, and the acceptance region
of a likelihood-ratio test for binomial counts (which never leaves the unit
box). Both solve primitives run a log-barrier Newton method; the ellipsoid's
linear minimization short-circuits to its closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import LiftStudy, chi2_quantile, log_likelihood, mle

__all__ = [
    "BarrierConfig",
    "Ellipsoid",
    "BinomialLikelihoodRegion",
    "RegionSolveError",
    "contains",
    "worst_case_params",
    "generalized_projection",
]


class RegionSolveError(RuntimeError):
    """A barrier solve failed to reach tolerance; carries its best iterate."""

    def __init__(self, message: str, best: np.ndarray | None = None, residual: float = math.nan):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True)
class BarrierConfig:
    """Schedule for the log-barrier method.

    Each stage minimizes ``t * objective + barrier`` by damped Newton steps,
    then multiplies t by ``t_scale``. ``newton_tol`` bounds half the squared
    Newton decrement.
    """

    t_init: float = 1.0
    t_scale: float = 20.0
    newton_tol: float = 1e-10
    max_newton_steps: int = 60
    stages: int = 12

    def __post_init__(self) -> None:
        if not self.t_init > 0:
            raise ValueError("t_init must be positive")
        if not self.t_scale > 1:
            raise ValueError("t_scale must exceed 1")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.max_newton_steps < 1 or self.stages < 1:
            raise ValueError("step and stage counts must be positive")


_DEFAULT_BARRIER = BarrierConfig()


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(hess, -grad)
    except np.linalg.LinAlgError:
        dim = hess.shape[0]
        ridge = 1e-12 * max(1.0, abs(float(np.trace(hess))) / dim)
        for _ in range(8):
            try:
                return np.linalg.solve(hess + ridge * np.eye(dim), -grad)
            except np.linalg.LinAlgError:
                ridge *= 100.0
    raise RegionSolveError("Newton system is singular beyond repair")


# A stage whose final half-squared Newton decrement is below this value has
# certifiably (almost) reached its central point, so the duality gap of its
# iterate is about (number of constraints) / t. Stages past the float-precision
# collapse of the constraint slack fail this and their iterates are discarded.
_CERTIFY_TOL = 1e-4


def _barrier_minimize(obj_value, obj_derivs, bar_value, bar_derivs, x0, config):
    """Minimize a convex objective over the barrier's domain.

    ``obj_derivs(x) -> (value, grad, hess-or-None)`` and ``bar_derivs(x) ->
    (value, grad, hess)``; the ``*_value`` callables must return +inf outside
    the domain, which doubles as the feasibility test in the line search.
    Returns the iterate of the last stage whose Newton decrement certified it.
    """
    x = np.array(x0, dtype=float)
    if not np.isfinite(bar_value(x)):
        raise RegionSolveError("barrier start point is not strictly feasible")
    eps = np.finfo(float).eps
    t = config.t_init
    certified = None
    lam2 = math.inf
    for _ in range(config.stages):
        prev_lam2 = math.inf
        plateau = 0
        for _ in range(config.max_newton_steps):
            fv, fg, fh = obj_derivs(x)
            bv, bg, bh = bar_derivs(x)
            grad = t * fg + bg
            hess = bh if fh is None else t * fh + bh
            dx = _newton_direction(hess, grad)
            lam2 = float(-(grad @ dx))
            if not math.isfinite(lam2) or lam2 < 0.0:
                break
            if 0.5 * lam2 <= config.newton_tol:
                break
            # a non-decreasing decrement near convergence means float noise
            # dominates; further steps cannot improve this stage
            if lam2 <= 1.0 and lam2 >= 0.99 * prev_lam2:
                plateau += 1
                if plateau >= 3:
                    break
            else:
                plateau = 0
            prev_lam2 = lam2
            merit = t * fv + bv
            slope = float(grad @ dx)
            # absolute slack keeps the Armijo test meaningful once the merit
            # decrease falls below float resolution at large t
            slack = 4.0 * eps * (abs(merit) + 1.0)
            alpha = 1.0
            accepted = False
            while alpha >= 1e-14:
                cand = x + alpha * dx
                cand_merit = t * obj_value(cand) + bar_value(cand)
                if math.isfinite(cand_merit) and cand_merit <= merit + 0.25 * alpha * slope + slack:
                    x = cand
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
        if not math.isfinite(lam2) or lam2 < 0.0 or 0.5 * lam2 <= _CERTIFY_TOL:
            certified = x.copy()
        t *= config.t_scale
    if certified is None:
        raise RegionSolveError(
            "no barrier stage reached its tolerance", best=x, residual=0.5 * lam2)
    return certified


def _quadratic_objective(mat: np.ndarray, w: np.ndarray):
    gram = 2.0 * (mat.T @ mat)

    def value(x):
        r = mat @ x - w
        return float(r @ r)

    def derivs(x):
        r = mat @ x - w
        return float(r @ r), 2.0 * (mat.T @ r), gram

    return value, derivs


def _linear_objective(q: np.ndarray):
    def value(x):
        return float(q @ x)

    def derivs(x):
        return float(q @ x), q, None

    return value, derivs


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Region {beta : (beta - center)' P (beta - center) <= 1}."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self) -> None:
        center = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        shape = np.asarray(self.shape, dtype=float)
        if shape.shape != (center.size, center.size):
            raise ValueError("shape matrix must be square and match the center")
        if not np.allclose(shape, shape.T, rtol=1e-10, atol=1e-12):
            raise ValueError("shape matrix must be symmetric")
        shape = 0.5 * (shape + shape.T)
        try:
            np.linalg.cholesky(shape)
        except np.linalg.LinAlgError:
            raise ValueError("shape matrix must be positive definite") from None
        center.flags.writeable = False
        shape = shape.copy()
        shape.flags.writeable = False
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def beta_hat(self) -> np.ndarray:
        return self.center

    def quadratic_form(self, beta) -> float:
        delta = np.asarray(beta, dtype=float) - self.center
        return float(delta @ self.shape @ delta)

    def contains(self, beta, slack: float = 0.0) -> bool:
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.dim,):
            raise ValueError(f"beta must have length {self.dim}")
        return self.quadratic_form(beta) <= 1.0 + slack

    def interior_point(self) -> np.ndarray:
        return self.center.copy()

    def _good_start(self, x) -> bool:
        return self.quadratic_form(x) <= 1.0 - 1e-6

    def _bar_value(self, x):
        delta = x - self.center
        sigma = 1.0 - float(delta @ self.shape @ delta)
        if sigma <= 0.0:
            return math.inf
        return -math.log(sigma)

    def _bar_derivs(self, x):
        delta = x - self.center
        pd = self.shape @ delta
        sigma = 1.0 - float(delta @ pd)
        if sigma <= 0.0:
            return math.inf, None, None
        grad = (2.0 / sigma) * pd
        hess = (2.0 / sigma) * self.shape + np.outer(grad, grad)
        return -math.log(sigma), grad, hess

    def _linear_min(self, q, start=None, config=None):
        q = np.asarray(q, dtype=float)
        if not np.any(q):
            return self.center.copy(), 0.0
        z = np.linalg.solve(self.shape, q)
        beta = self.center - z / math.sqrt(float(q @ z))
        return beta, float(q @ beta)

    def _gen_proj(self, mat, w, start=None, config=None):
        value, derivs = _quadratic_objective(mat, w)
        x0 = _blend_start(self, start)
        return _barrier_minimize(value, derivs, self._bar_value, self._bar_derivs, x0,
                                 config or _DEFAULT_BARRIER)


@dataclass(frozen=True, eq=False)
class BinomialLikelihoodRegion:
    """Acceptance region of the likelihood-ratio test over binomial rates.

    Membership means ``2 * (max_log_likelihood - ll(beta)) <= radius`` with
    beta inside the unit box; the radius is a chi-square quantile at the
    requested confidence level. The region is a subset of [0, 1]^{2n} by
    construction.
    """

    successes: np.ndarray
    trials: np.ndarray
    alpha: float
    radius: float
    beta_hat: np.ndarray
    max_log_likelihood: float

    @classmethod
    def from_study(cls, study: LiftStudy, alpha: float = 0.05) -> "BinomialLikelihoodRegion":
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        beta_hat = mle(study)
        return cls(
            successes=study.successes,
            trials=study.trials,
            alpha=alpha,
            radius=chi2_quantile(1.0 - alpha, 2 * study.n),
            beta_hat=beta_hat,
            max_log_likelihood=log_likelihood(beta_hat, study),
        )

    def __post_init__(self) -> None:
        s = np.asarray(self.successes, dtype=float).copy()
        t = np.asarray(self.trials, dtype=float).copy()
        bh = np.asarray(self.beta_hat, dtype=float).copy()
        if s.shape != t.shape or bh.shape != s.shape or s.ndim != 1:
            raise ValueError("successes, trials, and beta_hat must be matching vectors")
        if np.any(t <= 0) or np.any(s < 0) or np.any(s > t):
            raise ValueError("require 0 <= successes <= trials with positive trials")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not math.isfinite(self.max_log_likelihood):
            raise ValueError("max_log_likelihood must be finite")
        for name, arr in (("successes", s), ("trials", t), ("beta_hat", bh)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.successes.size

    def _log_likelihood(self, beta: np.ndarray) -> float:
        s = self.successes
        t = self.trials
        with np.errstate(divide="ignore", invalid="ignore"):
            hits = np.where(s > 0, s * np.log(beta), 0.0)
            misses = np.where(t - s > 0, (t - s) * np.log1p(-beta), 0.0)
        return float(np.sum(hits) + np.sum(misses))

    def deviance(self, beta) -> float:
        """Likelihood-ratio statistic 2 * (ll(beta_hat) - ll(beta))."""
        beta = np.asarray(beta, dtype=float)
        return 2.0 * (self.max_log_likelihood - self._log_likelihood(beta))

    def contains(self, beta, slack: float = 0.0) -> bool:
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.dim,):
            raise ValueError(f"beta must have length {self.dim}")
        if np.any(beta < -slack) or np.any(beta > 1.0 + slack):
            return False
        return self.deviance(np.clip(beta, 0.0, 1.0)) <= self.radius + slack

    def interior_point(self) -> np.ndarray:
        """A strictly feasible point: the MLE, nudged inward where degenerate."""
        x = self.beta_hat.copy()
        at_edge = (x <= 0.0) | (x >= 1.0)
        if not at_edge.any():
            return x
        pull = 1e-4
        for _ in range(40):
            y = x.copy()
            y[at_edge] = x[at_edge] + pull * (0.5 - x[at_edge])
            if math.isfinite(self._bar_value(y)):
                return y
            pull /= 8.0
        raise RegionSolveError("could not construct a strictly feasible start")

    def _good_start(self, x) -> bool:
        if np.any(x <= 1e-9) or np.any(x >= 1.0 - 1e-9):
            return False
        return self.deviance(x) <= self.radius * (1.0 - 1e-6)

    def _bar_value(self, x):
        if np.any(x <= 0.0) or np.any(x >= 1.0):
            return math.inf
        sigma = self.radius - self.deviance(x)
        if sigma <= 0.0:
            return math.inf
        return -math.log(sigma) - float(np.sum(np.log(x)) + np.sum(np.log1p(-x)))

    def _bar_derivs(self, x):
        s = self.successes
        t = self.trials
        sigma = self.radius - self.deviance(x)
        inv_x = 1.0 / x
        inv_1mx = 1.0 / (1.0 - x)
        dev_grad = -2.0 * (s * inv_x - (t - s) * inv_1mx)
        dev_curv = 2.0 * (s * inv_x**2 + (t - s) * inv_1mx**2)
        value = -math.log(sigma) - float(np.sum(np.log(x)) + np.sum(np.log1p(-x)))
        grad = dev_grad / sigma - inv_x + inv_1mx
        hess = np.outer(dev_grad, dev_grad) / sigma**2
        hess[np.diag_indices_from(hess)] += dev_curv / sigma + inv_x**2 + inv_1mx**2
        return value, grad, hess

    def _linear_min(self, q, start=None, config=None):
        q = np.asarray(q, dtype=float)
        if not np.any(q):
            return self.interior_point(), 0.0
        value, derivs = _linear_objective(q)
        x0 = _blend_start(self, start)
        beta = _barrier_minimize(value, derivs, self._bar_value, self._bar_derivs, x0,
                                 config or _DEFAULT_BARRIER)
        return beta, float(q @ beta)

    def _gen_proj(self, mat, w, start=None, config=None):
        value, derivs = _quadratic_objective(mat, w)
        x0 = _blend_start(self, start)
        return _barrier_minimize(value, derivs, self._bar_value, self._bar_derivs, x0,
                                 config or _DEFAULT_BARRIER)


def _blend_start(region, hint):
    """Pick a well-interior start, pulling a boundary or infeasible hint inward.

    A hint straight off a previous solve usually sits on the region boundary,
    where the barrier is singular; blending toward the interior anchor
    restores a workable margin while keeping most of the warm-start benefit.
    """
    anchor = region.interior_point()
    if hint is None:
        return anchor
    hint = np.asarray(hint, dtype=float)
    if hint.shape != anchor.shape or not np.all(np.isfinite(hint)):
        return anchor
    for weight in (0.0, 1e-3, 0.01, 0.1, 0.5):
        cand = (1.0 - weight) * hint + weight * anchor
        if region._good_start(cand):
            return cand
    return anchor


def contains(region, beta, slack: float = 0.0) -> bool:
    """Whether ``beta`` satisfies the region's defining inequality within ``slack``."""
    return region.contains(np.asarray(beta, dtype=float), slack)


def worst_case_params(region, c, a, start=None, config: BarrierConfig | None = None):
    """Rates in the region minimizing the outcome of allocation ``c``.

    Returns ``(beta_star, value)`` where value is ``c @ A @ beta_star``, the
    worst outcome of ``c`` over the region. ``start`` optionally seeds the
    interior-point solve (useful when chaining nearby solves).
    """
    mat = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if c.shape != (mat.shape[0],) or mat.shape[1] != region.dim:
        raise ValueError("dimension mismatch between decision, matrix, and region")
    if not np.all(np.isfinite(c)):
        raise ValueError("decision vector must be finite")
    return region._linear_min(mat.T @ c, start=start, config=config)


def generalized_projection(region, a, w, start=None, config: BarrierConfig | None = None):
    """Minimize ``||A @ beta - w||^2`` over the region.

    With the identity map this is Euclidean projection onto the region. The
    map here is usually wide, so the minimizer need not be unique; the
    barrier's analytic-center bias picks one deterministically, and only the
    attained objective value is contractual.
    """
    mat = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    if mat.ndim != 2 or mat.shape[1] != region.dim or w.shape != (mat.shape[0],):
        raise ValueError("dimension mismatch between map, target, and region")
    if not np.all(np.isfinite(w)):
        raise ValueError("projection target must be finite")
    return region._gen_proj(mat, w, start=start, config=config)
