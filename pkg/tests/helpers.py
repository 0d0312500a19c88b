"""Independent oracle implementations the tests check the library against.

Nothing here shares code paths with the library: projections are done by
face enumeration or scalar root-finding, linear minimization over the
likelihood-ratio region by dual decomposition, and region sampling by
bisection along rays. Deliberately slow and simple.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import optimize


def simplex_projection_oracle(x: np.ndarray, budget: float) -> np.ndarray:
    """Projection onto {c >= 0, sum c <= budget} by enumerating active sets.

    For every subset of zeroed coordinates and each state of the budget
    constraint, solve the equality-constrained projection, keep feasible
    candidates, and return the closest. Exact for any dimension, exponential
    cost; intended for n <= 6.
    """
    n = x.size
    best = None
    best_dist = math.inf
    for zero_mask in itertools.product([False, True], repeat=n):
        free = ~np.array(zero_mask)
        for sum_active in (False, True):
            c = np.zeros(n)
            if free.any():
                if sum_active:
                    shift = (x[free].sum() - budget) / free.sum()
                    c[free] = x[free] - shift
                else:
                    c[free] = x[free]
            if np.any(c < -1e-12) or c.sum() > budget + 1e-12:
                continue
            dist = float(np.linalg.norm(c - x))
            if dist < best_dist - 1e-15:
                best_dist = dist
                best = c
    return best


def ellipsoid_projection_oracle(w: np.ndarray, center: np.ndarray,
                                shape: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {(b-center)' P (b-center) <= 1}.

    Single-constraint Lagrangian: the projection is
    ``x(lam) = (I + lam P)^-1 (w + lam P center)`` with lam >= 0 chosen by
    root-finding on the constraint. Solved in the eigenbasis of P.
    """
    delta = w - center
    if float(delta @ shape @ delta) <= 1.0:
        return w.copy()
    evals, evecs = np.linalg.eigh(shape)
    d = evecs.T @ delta

    def violation(lam: float) -> float:
        scaled = d / (1.0 + lam * evals)
        return float(np.sum(evals * scaled**2)) - 1.0

    lo, hi = 0.0, 1.0
    while violation(hi) > 0.0:
        hi *= 2.0
        if hi > 1e18:
            raise RuntimeError("failed to bracket the multiplier")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if violation(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return center + evecs @ (d / (1.0 + lam * evals))


def ellipsoid_linear_min_value(q: np.ndarray, center: np.ndarray,
                               shape: np.ndarray) -> float:
    """min of q @ b over the ellipsoid, from the support function."""
    z = np.linalg.solve(shape, q)
    return float(q @ center) - math.sqrt(max(float(q @ z), 0.0))


def _group_deviance(b, s, t):
    with np.errstate(divide="ignore", invalid="ignore"):
        hat = s / t
        ref = np.where(s > 0, s * np.log(hat), 0.0) + np.where(t - s > 0,
                                                               (t - s) * np.log1p(-hat), 0.0)
        val = np.where(s > 0, s * np.log(b), 0.0) + np.where(t - s > 0,
                                                             (t - s) * np.log1p(-b), 0.0)
    return 2.0 * (ref - val)


def _group_deviance_slope(b, s, t):
    return -2.0 * (s / b - (t - s) / (1.0 - b))


def lr_linear_min_oracle(q: np.ndarray, successes: np.ndarray, trials: np.ndarray,
                         radius: float) -> tuple[np.ndarray, float]:
    """min of q @ b over the likelihood-ratio region by dual decomposition.

    For a multiplier lam, each coordinate solves a one-dimensional convex
    problem min q_i b + lam dev_i(b) on [0, 1] by bisection on the slope
    (vectorized over coordinates); the multiplier is then bisected on the
    total-deviance constraint. Exact by strong duality (one separable
    constraint).
    """
    s = np.asarray(successes, dtype=float)
    t = np.asarray(trials, dtype=float)
    q = np.asarray(q, dtype=float)
    eps = 1e-15

    def coordinate_argmin(lam: float) -> np.ndarray:
        if lam == 0.0:
            down = np.where(s > 0, eps, 0.0)
            up = np.where(t - s > 0, 1.0 - eps, 1.0)
            return np.where(q > 0, down, np.where(q < 0, up, s / t))

        def slope(b):
            return q + lam * _group_deviance_slope(b, s, t)

        lo = np.full_like(q, eps)
        hi = np.full_like(q, 1.0 - eps)
        at_lo = slope(lo) >= 0.0
        at_hi = slope(hi) <= 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            going_down = slope(mid) < 0.0
            lo = np.where(going_down, mid, lo)
            hi = np.where(going_down, hi, mid)
        out = 0.5 * (lo + hi)
        out = np.where(at_lo, np.where(s > 0, eps, 0.0), out)
        return np.where(at_hi, np.where(t - s > 0, 1.0 - eps, 1.0), out)

    def total_deviance(b):
        return float(np.sum(_group_deviance(b, s, t)))

    def slack(lam):
        return total_deviance(coordinate_argmin(lam)) - radius

    unconstrained = coordinate_argmin(0.0)
    if total_deviance(unconstrained) <= radius:
        return unconstrained, float(q @ unconstrained)
    hi = 1.0
    while slack(hi) > 0.0:
        hi *= 4.0
        if hi > 1e16:
            raise RuntimeError("failed to bracket the multiplier")
    lam = optimize.brentq(slack, hi / 4.0 if hi > 1.0 else 0.0, hi,
                          xtol=1e-14, rtol=1e-14, maxiter=200)
    # evaluate just inside the feasible side of the root
    beta = coordinate_argmin(lam * (1.0 + 1e-12))
    if total_deviance(beta) > radius:
        beta = coordinate_argmin(lam * (1.0 + 1e-9))
    return beta, float(q @ beta)


def region_linear_min_value(region, q: np.ndarray) -> float:
    """Worst linear value over either region kind via the oracles above."""
    from robustlift.regions import BinomialLikelihoodRegion, Ellipsoid

    if isinstance(region, Ellipsoid):
        return ellipsoid_linear_min_value(q, region.center, region.shape)
    assert isinstance(region, BinomialLikelihoodRegion)
    _, value = lr_linear_min_oracle(q, region.successes, region.trials, region.radius)
    return value


def sample_region(region, rng: np.random.Generator, count: int,
                  interior: float | None = None) -> np.ndarray:
    """Members of a convex region: random rays from an interior point,
    bisect to the boundary, then pull back by a random fraction."""
    x0 = region.interior_point()
    dim = x0.size
    out = np.empty((count, dim))
    for j in range(count):
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        hi = 1.0
        grow = 0
        while region.contains(x0 + hi * direction, 0.0) and grow < 60:
            hi *= 2.0
            grow += 1
        lo = 0.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if region.contains(x0 + mid * direction, 0.0):
                lo = mid
            else:
                hi = mid
        fraction = rng.uniform() if interior is None else interior
        out[j] = x0 + fraction * lo * direction
    return out


def sample_decisions(space, rng: np.random.Generator, count: int) -> np.ndarray:
    """Random feasible allocations: Dirichlet direction times a random scale."""
    weights = rng.dirichlet(np.ones(space.n), size=count)
    scales = rng.uniform(0.0, 1.0, size=count) ** (1.0 / space.n)
    return space.budget * weights * scales[:, None]


def grid_refine_min(objective, lows, highs, steps=60, rounds=4):
    """Coordinate-box grid search with shrinking windows around the best cell."""
    lows = np.asarray(lows, dtype=float).copy()
    highs = np.asarray(highs, dtype=float).copy()
    best_x = None
    best_val = math.inf
    for _ in range(rounds):
        axes = [np.linspace(lo, hi, steps) for lo, hi in zip(lows, highs)]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        values = np.array([objective(p) for p in points])
        idx = int(np.argmin(values))
        if values[idx] < best_val:
            best_val = float(values[idx])
            best_x = points[idx].copy()
        spans = (highs - lows) / (steps - 1)
        lows = np.maximum(lows, best_x - 2 * spans)
        highs = np.minimum(highs, best_x + 2 * spans)
    return best_x, best_val
