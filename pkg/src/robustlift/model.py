"""Lift-study data, the linear outcome model, and binomial likelihood utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "ChannelData",
    "LiftStudy",
    "OutcomeMatrix",
    "build_outcome_matrix",
    "expected_outcome",
    "log_likelihood",
    "mle",
    "chi2_cdf",
    "chi2_quantile",
]


@dataclass(frozen=True)
class ChannelData:
    """Trial counts and reach cost for one channel of a lift study.

    The holdout group saw no ads, the marketing group did; ``cost`` is the
    amount of budget needed to reach one person in this channel.
    """

    trials_holdout: int
    successes_holdout: int
    trials_marketing: int
    successes_marketing: int
    cost: float

    def __post_init__(self) -> None:
        if self.trials_holdout <= 0 or self.trials_marketing <= 0:
            raise ValueError("trial counts must be positive")
        if not 0 <= self.successes_holdout <= self.trials_holdout:
            raise ValueError("holdout successes must lie in [0, trials]")
        if not 0 <= self.successes_marketing <= self.trials_marketing:
            raise ValueError("marketing successes must lie in [0, trials]")
        if not self.cost > 0:
            raise ValueError("cost must be positive")


@dataclass(frozen=True)
class LiftStudy:
    """A collection of per-channel lift tests plus the total budget."""

    channels: tuple[ChannelData, ...]
    budget: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ValueError("study needs at least one channel")
        if not self.budget > 0:
            raise ValueError("budget must be positive")

    @property
    def n(self) -> int:
        return len(self.channels)

    @cached_property
    def successes(self) -> np.ndarray:
        """Success counts interleaved as [s1H, s1M, s2H, s2M, ...]."""
        out = np.empty(2 * self.n)
        for i, ch in enumerate(self.channels):
            out[2 * i] = ch.successes_holdout
            out[2 * i + 1] = ch.successes_marketing
        out.flags.writeable = False
        return out

    @cached_property
    def trials(self) -> np.ndarray:
        """Trial counts interleaved to match :attr:`successes`."""
        out = np.empty(2 * self.n)
        for i, ch in enumerate(self.channels):
            out[2 * i] = ch.trials_holdout
            out[2 * i + 1] = ch.trials_marketing
        out.flags.writeable = False
        return out

    @cached_property
    def costs(self) -> np.ndarray:
        out = np.array([ch.cost for ch in self.channels], dtype=float)
        out.flags.writeable = False
        return out


@dataclass(frozen=True, eq=False)
class OutcomeMatrix:
    """The n x 2n map from conversion rates to per-unit incremental outcomes.

    Row i carries -1/cost_i in column 2i (holdout rate) and +1/cost_i in
    column 2i+1 (marketing rate), so that for an allocation c and rates b,
    ``c @ entries @ b`` equals sum_i c_i * (b_i^M - b_i^H) / cost_i.
    """

    n: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (self.n, 2 * self.n):
            raise ValueError(f"entries must have shape ({self.n}, {2 * self.n})")
        for i in range(self.n):
            row = entries[i]
            nz = np.flatnonzero(row)
            if not np.array_equal(nz, [2 * i, 2 * i + 1]):
                raise ValueError(f"row {i} must be nonzero exactly at columns {2 * i}, {2 * i + 1}")
            if not (row[2 * i] < 0 and row[2 * i + 1] == -row[2 * i]):
                raise ValueError(f"row {i} nonzeros must be -1/cost, +1/cost")
        entries = entries.copy()
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def build_outcome_matrix(study: LiftStudy) -> OutcomeMatrix:
    """Assemble the outcome matrix of a study from its per-channel costs."""
    n = study.n
    entries = np.zeros((n, 2 * n))
    for i, cost in enumerate(study.costs):
        if not cost > 0:
            raise ValueError("cost must be positive")
        entries[i, 2 * i] = -1.0 / cost
        entries[i, 2 * i + 1] = 1.0 / cost
    return OutcomeMatrix(n=n, entries=entries)


def expected_outcome(c, beta, a) -> float:
    """Bilinear outcome c @ A @ beta of an allocation at given rates."""
    mat = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if mat.ndim != 2 or c.shape != (mat.shape[0],) or beta.shape != (mat.shape[1],):
        raise ValueError("dimension mismatch between decision, matrix, and rates")
    return float(c @ mat @ beta)


def log_likelihood(beta, study: LiftStudy) -> float:
    """Binomial log-likelihood of rates ``beta`` under the study counts.

    Sums s*log(b) + (t-s)*log(1-b) over all 2n groups with the convention
    0*log(0) = 0. Returns -inf when some rate is at 0 or 1 with a nonzero
    opposing count. Rates outside [0, 1] are rejected.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (2 * study.n,):
        raise ValueError(f"beta must have length {2 * study.n}")
    if np.any(beta < 0) or np.any(beta > 1):
        raise ValueError("rates must lie in [0, 1]")
    s = study.successes
    t = study.trials
    with np.errstate(divide="ignore", invalid="ignore"):
        log_b = np.log(beta)
        log_1mb = np.log1p(-beta)
        hits = np.where(s > 0, s * log_b, 0.0)
        misses = np.where(t - s > 0, (t - s) * log_1mb, 0.0)
    return float(np.sum(hits) + np.sum(misses))


def mle(study: LiftStudy) -> np.ndarray:
    """Per-group maximum likelihood rates, successes / trials."""
    return study.successes / study.trials


def _lower_gamma_regularized(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), series/continued fraction."""
    if x < 0 or a <= 0:
        raise ValueError("require x >= 0 and a > 0")
    if x == 0.0:
        return 0.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        # series expansion around 0
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(500):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return min(1.0, total * math.exp(log_prefactor))
    # Lentz continued fraction for the upper tail
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    upper = math.exp(log_prefactor) * h
    return max(0.0, 1.0 - upper)


def chi2_cdf(x: float, dof: int) -> float:
    """CDF of the chi-square distribution with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be a positive integer")
    if x <= 0:
        return 0.0
    return _lower_gamma_regularized(dof / 2.0, x / 2.0)


def chi2_quantile(prob: float, dof: int) -> float:
    """Inverse chi-square CDF by bisection, accurate to 1e-8 in CDF value."""
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie strictly inside (0, 1)")
    if dof < 1:
        raise ValueError("dof must be a positive integer")
    lo = 0.0
    hi = dof + 10.0 * math.sqrt(2.0 * dof) + 10.0
    for _ in range(200):
        if chi2_cdf(hi, dof) >= prob:
            break
        hi *= 2.0
    else:
        raise ValueError("failed to bracket the quantile")
    while hi - lo > 1e-13 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, dof) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
