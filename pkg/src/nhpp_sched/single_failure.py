"""The at-most-one-failure model: closed forms and quadrature.

Only the first disruption can ever occur.  If it lands at time s while the
i-th scheduled task is in progress, that task restarts once and everything
afterwards runs failure-free, so the makespan is s plus the remaining work
including the restarted task; a first failure after all work means the
makespan is just the total work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from . import rates
from .errors import DomainError
from .tasks import Permutation, TaskBatch

STRICTLY_DECREASING = "StrictlyDecreasing"
STRICTLY_INCREASING = "StrictlyIncreasing"
NEITHER = "Neither"

_TWO_ROUTE_TOL = 1e-9


@dataclass(frozen=True)
class SingleFailureResult:
    expected_makespan: float
    permutation: Permutation
    density_monotonicity: str


def first_failure_density(model, t) -> float:
    """Density of the first disruption time: lam(t) * exp(-cumulative)."""
    lam = np.asarray(rates.rate(model, t), dtype=float)
    mass = np.asarray(rates.cumulative_from_zero(model, t), dtype=float)
    out = lam * np.exp(-mass)
    return float(out) if np.ndim(t) == 0 else out


def first_failure_cdf(model, t) -> float:
    """P(first disruption <= t) = 1 - exp(-cumulative); exact, no quadrature."""
    mass = np.asarray(rates.cumulative_from_zero(model, t), dtype=float)
    out = -np.expm1(-mass)
    return float(out) if np.ndim(t) == 0 else out


def density_monotonicity(model, horizon: float, n_probe: int = 10_000) -> str:
    """Classify the first-failure density on [0, horizon].

    A weakly decreasing positive rate always has a strictly decreasing
    density, so those kinds are classified analytically; everything else is
    probed on a dense grid (step rates jump, so the probe compares density
    values directly rather than a derivative criterion).
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    meta = rates.metadata(model)
    if meta.lambda_bar == 0.0:
        return NEITHER
    if meta.monotonicity.direction in ("decreasing", "constant") and meta.f_minus > 0:
        return STRICTLY_DECREASING
    grid = np.linspace(0.0, horizon, n_probe + 1)
    p = np.asarray(first_failure_density(model, grid))
    d = np.diff(p)
    if np.all(d < 0):
        return STRICTLY_DECREASING
    if np.all(d > 0):
        return STRICTLY_INCREASING
    return NEITHER


def _density_first_moment(model, lo: float, hi: float) -> float:
    """Integral of s * p(s) over [lo, hi] by adaptive quadrature."""
    if hi <= lo:
        return 0.0
    pts = [b for b in rates.breakpoints(model) if lo < b < hi] or None
    val, _ = integrate.quad(
        lambda s: s * first_failure_density(model, s), lo, hi,
        points=pts, limit=200, epsabs=1e-13, epsrel=1e-11)
    return val


def makespan_by_windows(model, batch: TaskBatch,
                        perm: Optional[Permutation] = None) -> float:
    """Expected single-failure makespan from the per-task window sum."""
    if perm is None:
        perm = Permutation.identity(batch.n)
    lengths = perm.apply(batch)
    total = float(sum(lengths))
    if not lengths:
        return 0.0
    bounds = np.concatenate(([0.0], np.cumsum(np.asarray(lengths))))
    value = total * math.exp(-float(rates.cumulative_from_zero(model, total)))
    for i in range(len(lengths)):
        lo, hi = float(bounds[i]), float(bounds[i + 1])
        remaining = total - lo
        mass = (first_failure_cdf(model, hi) - first_failure_cdf(model, lo))
        value += _density_first_moment(model, lo, hi) + remaining * mass
    return value


def makespan_rearranged(model, batch: TaskBatch,
                        perm: Optional[Permutation] = None) -> float:
    """Expected single-failure makespan via the algebraic rearrangement:
    total * survival + first moment of p on [0, total] + sum of
    a_i * CDF(prefix_i)."""
    if perm is None:
        perm = Permutation.identity(batch.n)
    lengths = perm.apply(batch)
    total = float(sum(lengths))
    if not lengths:
        return 0.0
    prefix = np.cumsum(np.asarray(lengths))
    value = total * math.exp(-float(rates.cumulative_from_zero(model, total)))
    value += _density_first_moment(model, 0.0, total)
    value += float(np.dot(np.asarray(lengths),
                          np.asarray(first_failure_cdf(model, prefix))))
    return value


def expected_makespan_single_failure(model, batch: TaskBatch,
                                     perm: Optional[Permutation] = None
                                     ) -> SingleFailureResult:
    """Expected makespan with at most one failure, cross-checked two ways."""
    if perm is None:
        perm = Permutation.identity(batch.n)
    by_windows = makespan_by_windows(model, batch, perm)
    by_algebra = makespan_rearranged(model, batch, perm)
    gap = abs(by_windows - by_algebra)
    if gap > _TWO_ROUTE_TOL * max(1.0, abs(by_algebra)):
        raise RuntimeError(
            f"single-failure evaluation routes disagree by {gap:.3e}")
    mono = density_monotonicity(model, batch.total) if batch.n else NEITHER
    return SingleFailureResult(by_algebra, perm, mono)


def pairwise_difference(model, batch: TaskBatch, perm: Permutation) -> float:
    """Difference identity-minus-permuted of expected single-failure
    makespans, in closed form up to the exact first-failure CDF:

        sum_i ( a_i * CDF(A_i) - a_pi(i) * CDF(A_pi(i)) )
    """
    lengths = np.asarray(batch.lengths, dtype=float)
    prefix_id = np.cumsum(lengths)
    permuted = np.asarray(perm.apply(batch), dtype=float)
    prefix_pi = np.cumsum(permuted)
    cdf_id = np.asarray(first_failure_cdf(model, prefix_id))
    cdf_pi = np.asarray(first_failure_cdf(model, prefix_pi))
    return float(np.dot(lengths, cdf_id) - np.dot(permuted, cdf_pi))
