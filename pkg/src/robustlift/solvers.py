"""Saddle-point solvers for bilinear outcome games over confidence regions.

All four solvers maximize the worst-case outcome ``f(c) = min over the region
of c @ A @ beta`` over the decision space:

* :func:`admm_solve` — consensus ADMM whose proximal step reduces exactly to
  a generalized projection onto the region. Works for any convex region.
* :func:`apg_solve` — accelerated projected gradient ascent on f, using the
  worst-case rates as a supergradient. Fast but needs f differentiable.
* :func:`subgradient_solve` — projected supergradient ascent with diminishing
  steps. Slow, assumption-free baseline.
* :func:`markowitz_solve` — maximizes the closed-form objective available
  when the region is an ellipsoid; no inner solves at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decision import DecisionSpace, best_response_value
from .regions import (
    Ellipsoid,
    RegionSolveError,
    contains,
    generalized_projection,
    worst_case_params,
)

__all__ = [
    "AdmmConfig",
    "IterateTrace",
    "SolveResult",
    "STATUS_CONVERGED",
    "STATUS_MAX_ITERATIONS",
    "STATUS_SUBPROBLEM_FAILURE",
    "prox_step",
    "admm_solve",
    "apg_solve",
    "subgradient_solve",
    "markowitz_solve",
    "duality_gap",
]

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_SUBPROBLEM_FAILURE = "subproblem-failure"


@dataclass(frozen=True)
class AdmmConfig:
    """Penalty, stopping tolerances, and iteration budget shared by the solvers.

    ``trace_gap`` asks the ADMM loop to recover the worst-case rates each
    iteration and record the duality gap; this doubles the inner-solver work,
    so it is off by default. The gradient-based solvers get the gap as a free
    byproduct and always record it.
    """

    rho: float = 1.0
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4
    max_iterations: int = 1000
    trace_gap: bool = False

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not (self.eps_abs > 0 and self.eps_rel > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass
class IterateTrace:
    """Per-iteration solver records; residual fields are NaN where undefined."""

    solver: str
    iterations: list[int] = field(default_factory=list)
    primal_residual: list[float] = field(default_factory=list)
    dual_residual: list[float] = field(default_factory=list)
    eps_pri: list[float] = field(default_factory=list)
    eps_dual: list[float] = field(default_factory=list)
    duality_gap: list[float] = field(default_factory=list)

    def append(self, k, r=math.nan, s=math.nan, eps_pri=math.nan, eps_dual=math.nan,
               gap=math.nan) -> None:
        self.iterations.append(int(k))
        self.primal_residual.append(float(r))
        self.dual_residual.append(float(s))
        self.eps_pri.append(float(eps_pri))
        self.eps_dual.append(float(eps_dual))
        self.duality_gap.append(float(gap))

    def __len__(self) -> int:
        return len(self.iterations)


@dataclass(frozen=True, eq=False)
class SolveResult:
    """A converged (or best-effort) saddle-point approximation.

    ``robust_value`` is the worst-case outcome of the returned decision;
    ``expected_value`` is its outcome at the point estimate.
    """

    decision: np.ndarray
    worst_case: np.ndarray
    robust_value: float
    expected_value: float
    status: str
    iterations: int


def _as_matrix(a) -> np.ndarray:
    mat = np.asarray(a, dtype=float)
    if mat.ndim != 2:
        raise ValueError("outcome map must be a matrix")
    return mat


def _uniform_start(space: DecisionSpace) -> np.ndarray:
    return space.project(np.full(space.n, space.budget / space.n))


def _initial_point(space, init):
    if init is None:
        return _uniform_start(space), None
    c0, beta0 = init
    c0 = space.project(np.asarray(c0, dtype=float))
    return c0, (None if beta0 is None else np.asarray(beta0, dtype=float))


def _gap_at(base_space, mat, beta, f_value) -> float:
    h, _ = best_response_value(base_space, beta, mat)
    return h - f_value


def prox_step(a, region, rho: float, v):
    """Proximal point of the negated worst-case objective, scaled by 1/rho.

    Evaluated in two exact steps: generalized projection of ``-rho * v``
    through the outcome map onto the region, then ``y = v + A @ beta / rho``.
    Returns ``(y, beta)``.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    mat = _as_matrix(a)
    v = np.asarray(v, dtype=float)
    beta = generalized_projection(region, mat, -rho * v)
    return v + (mat @ beta) / rho, beta


def admm_solve(a, region, space: DecisionSpace, config: AdmmConfig | None = None,
               init=None) -> tuple[SolveResult, IterateTrace]:
    """Consensus ADMM on the split  max f(c)  s.t.  c in the decision space.

    Per iteration, with penalty rho and scaled dual u:

        v      = c - u
        beta   = argmin over region of ||A beta + rho v||^2
        y      = v + A beta / rho
        c_next = project(y + u)
        u      = u + y - c_next

    Stops when the primal residual ||y - c|| and dual residual
    ``rho * ||c_next - c||`` fall below their mixed absolute/relative
    tolerances. The per-iteration beta is an intermediate of the proximal
    computation, not the worst case for c, so the returned worst-case rates
    are recovered by a final dedicated solve at the final decision.
    """
    cfg = config or AdmmConfig()
    mat = _as_matrix(a)
    n = space.n
    c, hint = _initial_point(space, init)
    u = np.zeros(n)
    trace = IterateTrace("admm")
    base = space.without_floor()
    sqrt_n = math.sqrt(n)
    status = STATUS_MAX_ITERATIONS
    iterations = 0
    for k in range(1, cfg.max_iterations + 1):
        v = c - u
        try:
            beta = generalized_projection(region, mat, -cfg.rho * v, start=hint)
        except RegionSolveError:
            status = STATUS_SUBPROBLEM_FAILURE
            break
        hint = beta
        y = v + (mat @ beta) / cfg.rho
        c_next = space.project(y + u)
        u = u + y - c_next
        r_norm = float(np.linalg.norm(y - c_next))
        s_norm = cfg.rho * float(np.linalg.norm(c_next - c))
        eps_pri = sqrt_n * cfg.eps_abs + cfg.eps_rel * max(
            float(np.linalg.norm(y)), float(np.linalg.norm(c_next)))
        eps_dual = sqrt_n * cfg.eps_abs + cfg.eps_rel * cfg.rho * float(np.linalg.norm(u))
        c = c_next
        iterations = k
        gap = math.nan
        if cfg.trace_gap:
            wc, f_k = worst_case_params(region, c, mat, start=hint)
            gap = _gap_at(base, mat, wc, f_k)
        trace.append(k, r_norm, s_norm, eps_pri, eps_dual, gap)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            status = STATUS_CONVERGED
            break
    beta_star, f_star, expected = _recover(region, mat, c, hint)
    return SolveResult(c, beta_star, f_star, expected, status, iterations), trace


def _recover(region, mat, c, hint):
    try:
        beta_star, f_star = worst_case_params(region, c, mat, start=hint)
    except RegionSolveError as err:
        beta_star = err.best if err.best is not None else region.interior_point()
        f_star = float(c @ mat @ beta_star)
    expected = float(c @ mat @ region.beta_hat)
    return beta_star, f_star, expected


def apg_solve(a, region, space: DecisionSpace, config: AdmmConfig | None = None,
              init=None) -> tuple[SolveResult, IterateTrace]:
    """Accelerated projected gradient ascent on the worst-case objective.

    The worst-case rates at the extrapolated point supply a supergradient
    ``A @ beta``; a backtracking line search enforces the ascent majorization
    and the momentum restarts whenever the objective decreases. The traced
    duality gap doubles as the stopping certificate. Line-search failure is
    reported as a subproblem failure — expected when the region has flat
    faces and the objective loses differentiability.
    """
    cfg = config or AdmmConfig()
    mat = _as_matrix(a)
    base = space.without_floor()
    trace = IterateTrace("apg")
    c, hint = _initial_point(space, init)
    try:
        beta_c, f_c = worst_case_params(region, c, mat, start=hint)
    except RegionSolveError:
        interior = region.interior_point()
        result = SolveResult(c, interior, math.nan, float(c @ mat @ region.beta_hat),
                             STATUS_SUBPROBLEM_FAILURE, 0)
        return result, trace
    best = (f_c, c, beta_c)
    z = c.copy()
    theta = 1.0
    step = 1.0
    status = STATUS_MAX_ITERATIONS
    iterations = 0
    for k in range(1, cfg.max_iterations + 1):
        iterations = k
        try:
            beta_z, f_z = worst_case_params(region, z, mat, start=beta_c)
            grad = mat @ beta_z
            accepted = False
            for _ in range(60):
                c_new = space.project(z + step * grad)
                beta_new, f_new = worst_case_params(region, c_new, mat, start=beta_z)
                dz = c_new - z
                bound = f_z + float(grad @ dz) - float(dz @ dz) / (2.0 * step)
                if f_new >= bound - 1e-12 * (1.0 + abs(f_new)):
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                status = STATUS_SUBPROBLEM_FAILURE
                break
        except RegionSolveError:
            status = STATUS_SUBPROBLEM_FAILURE
            break
        theta_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
        z = c_new + ((theta - 1.0) / theta_next) * (c_new - c)
        if f_new < f_c:
            theta_next = 1.0
            z = c_new.copy()
        moved = float(np.linalg.norm(c_new - c))
        c, f_c, beta_c = c_new, f_new, beta_new
        theta = theta_next
        if f_c > best[0]:
            best = (f_c, c, beta_c)
        gap = _gap_at(base, mat, beta_c, f_c)
        trace.append(k, gap=gap)
        if gap <= cfg.eps_abs:
            status = STATUS_CONVERGED
            break
        if moved <= 1e-13 * (1.0 + float(np.linalg.norm(c))):
            status = STATUS_CONVERGED
            break
    f_best, c_best, beta_best = best
    expected = float(c_best @ mat @ region.beta_hat)
    return SolveResult(c_best, beta_best, f_best, expected, status, iterations), trace


def _spectral_norm(mat: np.ndarray, iterations: int = 50) -> float:
    x = np.full(mat.shape[1], 1.0 / math.sqrt(mat.shape[1]))
    for _ in range(iterations):
        y = mat.T @ (mat @ x)
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
    return float(np.linalg.norm(mat @ x))


def subgradient_solve(a, region, space: DecisionSpace, config: AdmmConfig | None = None,
                      init=None) -> tuple[SolveResult, IterateTrace]:
    """Projected supergradient ascent with steps alpha0 / sqrt(k).

    ``alpha0`` is one over a power-iteration estimate of the outcome map's
    spectral norm. Returns the best iterate seen, since plain subgradient
    iterates are not monotone in the objective.
    """
    cfg = config or AdmmConfig()
    mat = _as_matrix(a)
    base = space.without_floor()
    trace = IterateTrace("subgradient")
    norm = _spectral_norm(mat)
    alpha0 = 1.0 / norm if norm > 0 else 1.0
    c, hint = _initial_point(space, init)
    status = STATUS_MAX_ITERATIONS
    iterations = 0
    try:
        beta, f_val = worst_case_params(region, c, mat, start=hint)
        best = (f_val, c, beta)
        for k in range(1, cfg.max_iterations + 1):
            iterations = k
            c = space.project(c + (alpha0 / math.sqrt(k)) * (mat @ beta))
            beta, f_val = worst_case_params(region, c, mat, start=beta)
            if f_val > best[0]:
                best = (f_val, c, beta)
            gap = _gap_at(base, mat, beta, f_val)
            trace.append(k, gap=gap)
            if gap <= cfg.eps_abs:
                status = STATUS_CONVERGED
                break
    except RegionSolveError:
        status = STATUS_SUBPROBLEM_FAILURE
        if "best" not in locals():
            interior = region.interior_point()
            result = SolveResult(c, interior, math.nan,
                                 float(c @ mat @ region.beta_hat), status, iterations)
            return result, trace
    f_best, c_best, beta_best = best
    expected = float(c_best @ mat @ region.beta_hat)
    return SolveResult(c_best, beta_best, f_best, expected, status, iterations), trace


def _project_unit_simplex(x: np.ndarray) -> np.ndarray:
    u = np.sort(x)[::-1]
    excess = np.cumsum(u) - 1.0
    counts = np.arange(1, x.size + 1)
    k = int(np.nonzero(u - excess / counts > 0)[0].max())
    return np.maximum(x - excess[k] / (k + 1), 0.0)


def markowitz_solve(a, region, space: DecisionSpace, max_iterations: int = 50000) -> SolveResult:
    """Maximize the ellipsoid's closed-form worst-case objective directly.

    For an ellipsoidal region the worst case of a decision c is available in
    closed form: ``c @ A @ center - sqrt(c @ K @ c)`` with
    ``K = A P^-1 A'``. That objective is positively homogeneous of degree
    one, so its maximum over the budget set is the budget times its maximum
    over the unit-sum simplex (or zero if that maximum is negative); on the
    unit-sum simplex the objective is smooth because K is positive definite,
    and accelerated projected gradient ascent with backtracking converges
    cleanly with no inner solves.
    """
    if not isinstance(region, Ellipsoid):
        raise ValueError("markowitz solver requires an ellipsoidal region")
    if space.floor is not None:
        raise ValueError("markowitz solver does not support an expected-outcome floor")
    mat = _as_matrix(a)
    if mat.shape != (space.n, region.dim):
        raise ValueError("dimension mismatch between map, region, and space")
    gains = mat @ region.center
    k_mat = mat @ np.linalg.solve(region.shape, mat.T)

    def value(w):
        quad = max(float(w @ k_mat @ w), 0.0)
        return float(gains @ w) - math.sqrt(quad)

    def gradient(w):
        quad = max(float(w @ k_mat @ w), 0.0)
        if quad <= 1e-300:
            return gains.copy()
        return gains - (k_mat @ w) / math.sqrt(quad)

    w = np.full(space.n, 1.0 / space.n)
    f_w = value(w)
    z = w.copy()
    theta = 1.0
    step = 1.0
    status = STATUS_MAX_ITERATIONS
    iterations = 0
    for k in range(1, max_iterations + 1):
        iterations = k
        grad_z = gradient(z)
        f_z = value(z)
        w_new = w
        for _ in range(80):
            w_new = _project_unit_simplex(z + step * grad_z)
            dz = w_new - z
            bound = f_z + float(grad_z @ dz) - float(dz @ dz) / (2.0 * step)
            if value(w_new) >= bound - 1e-15:
                break
            step *= 0.5
        theta_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
        z = w_new + ((theta - 1.0) / theta_next) * (w_new - w)
        f_new = value(w_new)
        if f_new < f_w:
            theta_next = 1.0
            z = w_new.copy()
        residual = float(np.linalg.norm(
            w_new - _project_unit_simplex(w_new + step * gradient(w_new)))) / step
        w, f_w, theta = w_new, f_new, theta_next
        if residual <= 1e-11:
            status = STATUS_CONVERGED
            break
    simplex_value = value(w)
    if simplex_value > 0.0:
        c = space.budget * w
        robust = space.budget * simplex_value
    else:
        c = np.zeros(space.n)
        robust = 0.0
    q = mat.T @ c
    if np.any(q):
        z_dir = np.linalg.solve(region.shape, q)
        beta_star = region.center - z_dir / math.sqrt(float(q @ z_dir))
    else:
        beta_star = region.center.copy()
    expected = float(c @ gains)
    return SolveResult(c, beta_star, robust, expected, status, iterations)


def duality_gap(a, region, space: DecisionSpace, c, beta) -> float:
    """Optimality certificate: best response at ``beta`` minus worst case of ``c``.

    Computed on the space without its floor; nonnegative for any feasible
    pair and zero exactly at a saddle point.
    """
    mat = _as_matrix(a)
    c = np.asarray(c, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if not space.contains(c, slack=1e-6):
        raise ValueError("decision is not feasible")
    if not contains(region, beta, slack=1e-6):
        raise ValueError("rates are outside the region")
    base = space.without_floor()
    h, _ = best_response_value(base, beta, mat)
    _, f_val = worst_case_params(region, c, mat)
    return h - f_val
