"""Sufficient-condition checkers for SPT/LPT optimality.

Each checker either certifies an order (every hypothesis verifiably holds
and the strict inequality is met) or reports the named hypothesis failures
and certifies nothing.  There is no "probably": the underlying statements
are sufficient conditions only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import rates
from .errors import DomainError
from .solver import MakespanGrid, refine_until
from .tasks import Permutation, TaskBatch, feasible_permutations

SPT = "SPT"
LPT = "LPT"

_SCAN_CAP_N = 10


@dataclass(frozen=True)
class ThresholdReport:
    """Outcome of a sufficient-condition check.

    ``certified_order`` is None unless every hypothesis holds and the
    model's scale (or the short-task length) is strictly inside the bound.
    ``binding_permutation`` attains the extremal bound in the scan.
    ``lambda_bar_cap`` is the guard value 1/(2 f_plus a_n) (or its analog),
    ``threshold_value`` the computed main bound.  ``heuristic`` marks scans
    truncated to the SPT/LPT and adjacent-swap neighborhood (n > 10).
    """

    certified_order: Optional[str]
    binding_permutation: Optional[Permutation]
    lambda_bar_cap: float
    threshold_value: Optional[float]
    hypothesis_failures: Tuple[str, ...] = ()
    heuristic: bool = False

    @property
    def certified(self) -> bool:
        return self.certified_order is not None


@dataclass(frozen=True)
class ShortTaskSpec:
    """Scaled short tasks: actual lengths are epsilon * base_lengths."""

    epsilon: float
    base_lengths: Tuple[float, ...]

    def __post_init__(self):
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")
        if any(a <= 0 for a in self.base_lengths):
            raise DomainError("base lengths must be positive")
        if any(self.base_lengths[i] >= self.base_lengths[i + 1]
               for i in range(len(self.base_lengths) - 1)):
            raise DomainError("base lengths must be strictly ascending")

    def batch(self) -> TaskBatch:
        return TaskBatch.from_lengths([self.epsilon * a for a in self.base_lengths])


def weighted_intensity_sum(model, batch: TaskBatch, perm: Permutation) -> float:
    """S(pi) = sum_i a_pi(i) * integral of the normalized shape over the
    prefix [0, A_pi(i)].  Uses the exact cumulative intensity."""
    meta = rates.metadata(model)
    if meta.lambda_bar <= 0:
        raise DomainError("weighted sum needs a positive rate scale")
    lengths = np.asarray(perm.apply(batch), dtype=float)
    prefix = np.cumsum(lengths)
    shape_integrals = np.asarray(
        rates.cumulative_from_zero(model, prefix)) / meta.lambda_bar
    return float(np.dot(lengths, shape_integrals))


def _adjacent_swaps(base: Permutation) -> List[Permutation]:
    out = []
    order = list(base.order)
    for k in range(len(order) - 1):
        swapped = order.copy()
        swapped[k], swapped[k + 1] = swapped[k + 1], swapped[k]
        out.append(Permutation(tuple(swapped)))
    return out


def _scan_permutations(batch: TaskBatch, target: Permutation
                       ) -> Tuple[List[Permutation], bool]:
    if batch.n <= _SCAN_CAP_N:
        perms = [p for p in feasible_permutations(batch.n) if p != target]
        return perms, False
    pool = {p for p in _adjacent_swaps(target)}
    pool.add(Permutation.identity(batch.n))
    pool.add(Permutation.reversal(batch.n))
    pool.discard(target)
    return sorted(pool, key=lambda p: p.order), True


def rate_scale_threshold(model, batch: TaskBatch) -> ThresholdReport:
    """Certify SPT (decreasing shape) or LPT (increasing shape) for a
    sufficiently small rate scale.

    The bound compares the weighted-intensity-sum gap against
    f_plus^2 * (A_n * sum a_i^2 + (3/4) A_n^3); certification additionally
    needs lambda_bar <= 1/(2 f_plus a_n).
    """

    meta = rates.metadata(model)
    a_n = max(batch.lengths) if batch.lengths else 0.0
    total = batch.total
    failures: List[str] = []
    if batch.n < 2:
        failures.append("need at least two tasks")
    if meta.f_minus <= 0:
        failures.append("f_minus <= 0")
    if not math.isfinite(meta.f_plus):
        failures.append("f_plus unavailable")
    if meta.lambda_bar <= 0:
        failures.append("rate scale is zero")
    direction = meta.monotonicity.direction
    if direction == "decreasing":
        order = SPT
    elif direction == "increasing":
        order = LPT
    else:
        order = None
        failures.append("rate is not monotone")
    if order is not None and not meta.monotonicity.strictly_monotone_on(0.0, total):
        failures.append("rate not strictly monotone on [0, A_n]")
    cap = (1.0 / (2.0 * meta.f_plus * a_n)
           if (a_n > 0 and math.isfinite(meta.f_plus) and meta.f_plus > 0)
           else math.inf)
    if failures:
        return ThresholdReport(None, None, cap, None, tuple(failures))

    target = (Permutation.identity(batch.n) if order == SPT
              else Permutation.reversal(batch.n))
    s_target = weighted_intensity_sum(model, batch, target)
    competitors, heuristic = _scan_permutations(batch, target)
    best_gap, binding = math.inf, None
    for perm in competitors:
        gap = weighted_intensity_sum(model, batch, perm) - s_target
        if gap < best_gap:
            best_gap, binding = gap, perm
    lengths = np.asarray(batch.lengths)
    denom = (meta.f_plus ** 2) * (total * float(np.sum(lengths ** 2))
                                  + 0.75 * total ** 3)
    threshold = best_gap / denom
    certified = meta.lambda_bar <= cap and meta.lambda_bar < threshold
    return ThresholdReport(order if certified else None, binding, cap,
                           threshold, (), heuristic)


def short_task_slope_threshold(model, spec: ShortTaskSpec,
                               lambda_bar: Optional[float] = None
                               ) -> ThresholdReport:
    """Certify SPT/LPT for sufficiently short tasks via the shape's initial
    slope.  Reports the |f'(0)| bound; no concrete epsilon is claimed."""
    meta = rates.metadata(model)
    lam_bar = meta.lambda_bar if lambda_bar is None else float(lambda_bar)
    failures: List[str] = []
    if len(spec.base_lengths) < 2:
        failures.append("need at least two tasks")
    slope = meta.f_prime_0
    if slope is None or not math.isfinite(slope):
        failures.append("f'(0) unavailable")
        slope = math.nan
    elif slope == 0.0:
        failures.append("f'(0) = 0")
    if not math.isfinite(meta.f_plus):
        failures.append("f_plus unavailable")
    if meta.f_minus <= 0:
        failures.append("f_minus <= 0")
    direction = meta.monotonicity.direction
    strict = meta.monotonicity.strict_on
    if direction == "decreasing":
        order = SPT
    elif direction == "increasing":
        order = LPT
    else:
        order = None
        failures.append("rate is not monotone")
    if order is not None and (strict is None or strict[0] > 0.0 or strict[1] <= 0.0):
        failures.append("rate not strictly monotone near 0")
    if failures:
        return ThresholdReport(None, None, math.inf, None, tuple(failures))

    base = np.asarray(spec.base_lengths, dtype=float)
    n = base.size
    total = float(base.sum())
    numer = 2.0 * lam_bar * (meta.f_plus ** 2) * (
        total * float(np.sum(base ** 2)) + 0.75 * total ** 3)

    def weighted_square_sum(perm: Permutation) -> float:
        lengths = base[list(perm.order)]
        prefix = np.cumsum(lengths)
        return float(np.dot(lengths, prefix ** 2))

    target = Permutation.identity(n) if order == SPT else Permutation.reversal(n)
    s_target = weighted_square_sum(target)
    bound, binding = -math.inf, None
    batch = TaskBatch.from_lengths(list(base))
    competitors, heuristic = _scan_permutations(batch, target)
    for perm in competitors:
        w = weighted_square_sum(perm)
        # SPT target maximizes the weighted square sum, LPT minimizes it,
        # so both denominators are positive for every competitor
        denom = (s_target - w) if order == SPT else (w - s_target)
        candidate = numer / denom if denom > 0 else math.inf
        if candidate > bound:
            bound, binding = candidate, perm
    certified = (abs(meta.f_prime_0) > bound if order == SPT
                 else meta.f_prime_0 > bound)
    return ThresholdReport(order if certified else None, binding, math.inf,
                           bound, (), heuristic)


def two_task_cutoffs(model, short: float, long: float) -> ThresholdReport:
    """Certify the order of two tasks when the short one is short enough.

    Case (i), weakly decreasing rate, strictly decreasing through the long
    task: SPT.  Case (ii), the increasing mirror: LPT.  The cutoff is the
    smaller of 1/(2 f_plus lambda_bar) and an explicit constant built from
    the rate's values at 0 and at the long length, its Lipschitz constant,
    and (case i) the numerically solved single-task mean.
    """
    if not (long > short > 0):
        raise DomainError("need long > short > 0")
    a, b = float(short), float(long)
    meta = rates.metadata(model)
    failures: List[str] = []
    if not meta.lipschitz_available:
        failures.append("Lipschitz constant unavailable")
    if meta.f_minus <= 0:
        failures.append("f_minus <= 0")
    if not math.isfinite(meta.f_plus):
        failures.append("f_plus unavailable")
    if meta.lambda_bar <= 0:
        failures.append("rate scale is zero")
    direction = meta.monotonicity.direction
    if direction == "decreasing":
        order = SPT
    elif direction == "increasing":
        order = LPT
    else:
        order = None
        failures.append("rate is not monotone")
    if order is not None and not meta.monotonicity.strictly_monotone_on(0.0, b):
        failures.append("rate not strictly monotone on [0, long]")
    lam_hi = meta.lambda_bar * meta.f_plus
    lam0 = float(rates.rate(model, 0.0))
    if order == SPT and abs(lam0 - lam_hi) > 1e-12 * max(1.0, lam_hi):
        failures.append("f(0) != f_plus")
    cap = 1.0 / (2.0 * meta.f_plus * meta.lambda_bar) if not failures else math.inf
    if failures:
        return ThresholdReport(None, None, cap, None, tuple(failures))

    lam_b = float(rates.rate(model, b))
    mass_b = float(rates.cumulative_from_zero(model, b))
    lips = meta.lipschitz_L
    swap = Permutation((1, 0))
    if order == SPT:
        mb0 = refine_until(model, TaskBatch.from_lengths([b]), tol=1e-6).value
        m1 = ((lips + lam_hi ** 2) * b
              + lam_hi ** 2 * (b + math.expm1(lam0 * b) / lam0)
              + 1.5 * lam0 * lam_b * (1.0 / (2.0 * lam_hi) + b
                                      + math.expm1(lam_b * b) / lam_b)
              + lam_b + lips * mb0 + lam0 ** 2 * mb0 + 1.5 * lam0)
        cutoff = -math.expm1(b * lam_b - mass_b) / m1
    else:
        m2 = (2.5 * lam_hi + b * lips
              + lam0 * (math.exp(lam_hi * b) + 0.5)
              + lam_b * (b * lam_hi - 1.0 + math.exp(lam_hi * b)))
        cutoff = math.expm1(lam_b * b - mass_b) / m2
    threshold = min(cap, cutoff)
    certified = a < threshold
    return ThresholdReport(order if certified else None, swap, cap, threshold)


@dataclass(frozen=True)
class BoundsReport:
    """Result of checking the sandwich bounds on a solved grid."""

    checked: bool
    violations: int = 0
    max_lower_violation: float = 0.0
    max_upper_violation: float = 0.0
    skipped_reason: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.checked and self.violations == 0


def check_grid_bounds(grid: MakespanGrid, lambda_bar: float,
                      f_plus: float, tol: float = 1e-9) -> BoundsReport:
    """Verify A_rem <= M_stage(t) <= A_rem + lambda_bar f_plus sum a_k^2
    at every grid node, valid when lambda_bar <= 1/(2 f_plus a_max)."""
    if grid.n == 0:
        return BoundsReport(True)
    a_max = max(grid.lengths)
    if not math.isfinite(f_plus) or f_plus <= 0:
        return BoundsReport(False, skipped_reason="f_plus unavailable")
    if lambda_bar > 1.0 / (2.0 * f_plus * a_max):
        return BoundsReport(
            False, skipped_reason="lambda_bar above 1/(2 f_plus a_max)")
    slack = tol * max(1.0, sum(grid.lengths))
    violations = 0
    worst_lo = worst_hi = 0.0
    lengths = np.asarray(grid.lengths)
    for i in range(grid.n):
        a_rem = float(lengths[i:].sum())
        upper = a_rem + lambda_bar * f_plus * float(np.sum(lengths[i:] ** 2))
        row = grid.values[i]
        lo_gap = float(np.max(a_rem - row))
        hi_gap = float(np.max(row - upper))
        if lo_gap > slack:
            violations += int(np.sum(a_rem - row > slack))
            worst_lo = max(worst_lo, lo_gap)
        if hi_gap > slack:
            violations += int(np.sum(row - upper > slack))
            worst_hi = max(worst_hi, hi_gap)
    return BoundsReport(True, violations, worst_lo, worst_hi)


@dataclass(frozen=True)
class OrderInvarianceReport:
    checked: bool
    max_exact_gap: Optional[float] = None
    exact_tol: Optional[float] = None
    mc_consistent: Optional[bool] = None
    skipped_reason: Optional[str] = None

    @property
    def passed(self) -> bool:
        if not self.checked:
            return False
        ok = self.max_exact_gap is not None and self.max_exact_gap <= self.exact_tol
        if self.mc_consistent is not None:
            ok = ok and self.mc_consistent
        return ok


def order_invariance_check(model, batch: TaskBatch, h: float = 1.0 / 1024,
                           exact_tol: float = 1e-4,
                           mc_replications: int = 0, seed: int = 0,
                           ) -> OrderInvarianceReport:
    """When the rate is constant past t0 and every task is longer than t0,
    the expected makespan is the same for every order.  Solves all
    permutations (n <= 5) and optionally compares Monte Carlo means."""
    from .simulate import estimate_makespan

    meta = rates.metadata(model)
    t0 = meta.tail_time_t0
    if t0 is None:
        return OrderInvarianceReport(False, skipped_reason="no constant tail")
    if not batch.lengths or min(batch.lengths) <= t0:
        return OrderInvarianceReport(
            False, skipped_reason="some task is not longer than t0")
    if batch.n > 5:
        return OrderInvarianceReport(False, skipped_reason="n > 5")
    values = [refine_until(model, batch, perm, tol=exact_tol / 4.0, h0=h).value
              for perm in feasible_permutations(batch.n)]
    gap = max(values) - min(values)
    mc_ok: Optional[bool] = None
    if mc_replications:
        ests = [estimate_makespan(model, batch, perm, mc_replications, seed)
                for perm in feasible_permutations(batch.n)]
        mc_ok = True
        for i in range(len(ests)):
            for j in range(i + 1, len(ests)):
                tol = 3.0 * (ests[i].std_error + ests[j].std_error)
                if abs(ests[i].mean - ests[j].mean) > tol:
                    mc_ok = False
    return OrderInvarianceReport(True, gap, exact_tol, mc_ok)
