"""Deterministic expected makespans.

Constant-rate closed forms, the zero-then-constant two-task special case,
the two-phase sequencing gap, and a numerical solver for the chain of
renewal-type integral equations satisfied by the conditional mean remaining
makespans M_{i:n}(t).

The chain equation for the stage holding tasks i..n (lengths in processing
order, B_j the partial sums of the remaining lengths) reads

    M_i(t) = A_rem * exp(-Int(t, t+A_rem))
             + sum_j Int_{t+B_{j-1}}^{t+B_j} lam(s) e^{-Int(t,s)} (s-t+M_j(s)) ds

It references *future* values M(s), s > t, so the solver sweeps backward in
time from a terminal region where the rate is constant and the stage value
is the constant-rate closed form.  Rates that never become constant are
clamped to lam(T_close) beyond the closure horizon and the result is
labeled accordingly.

Discretization: composite trapezoid on a uniform grid, with the
self-referencing left endpoint resolved implicitly,
M(t) = rhs_known / (1 - (h/2) lam(t)).  Window endpoints that fall between
grid nodes are handled by linear interpolation of the cumulative tables.
The scheme is second order for continuous rates; step rates keep one-sided
values at the nodes so jumps aligned with the grid stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from . import rates
from .errors import (DomainError, MissingClosureError, NonConvergenceError,
                     StepTooCoarseError)
from .tasks import Permutation, TaskBatch

_MAX_LOG_MASS = 600.0  # exp(E) must stay finite in float64

EXACT_TAIL = "exact"
CLAMPED_TAIL = "clamped"


def constant_rate_single(lam: float, a: float) -> float:
    """Expected completion time of one task under a constant rate."""
    if lam <= 0:
        raise DomainError("lam must be positive (zero rate is the limit a)")
    if a <= 0:
        raise DomainError("task length must be positive")
    return math.expm1(lam * a) / lam


def constant_rate_batch(lam: float, batch: TaskBatch) -> float:
    """Expected makespan of a batch under a constant rate (order-free)."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    return sum(math.expm1(lam * a) / lam for a in batch.lengths)


def zero_then_constant_two_task(a: float, b: float, lam: float
                                ) -> Tuple[float, float]:
    """Exact two-task expected makespans when the rate is 0 on [0, b] and
    constant afterwards.  Returns (short-first, long-first); the long-first
    value is always the smaller one."""
    if not (b > a > 0):
        raise DomainError("need b > a > 0")
    if lam <= 0:
        raise DomainError("lam must be positive")
    m_ab = b + (math.exp(lam * b) - math.exp(lam * (b - a))) / lam
    m_ba = b + math.expm1(lam * a) / lam
    return m_ab, m_ba


def two_phase_delta(a: float, b: float, lam1: float, lam2: float) -> float:
    """Expected-makespan gap, short-first minus long-first, when the rate
    switches from lam1 to lam2 the moment the first task completes."""
    if not (0 < a <= b):
        raise DomainError("need 0 < a <= b")
    if lam1 <= 0 or lam2 <= 0:
        raise DomainError("rates must be positive")
    return ((math.exp(lam1 * a) - math.exp(lam1 * b)) / lam1
            - (math.exp(lam2 * a) - math.exp(lam2 * b)) / lam2)


@dataclass(frozen=True)
class TailClosure:
    kind: str  # EXACT_TAIL | CLAMPED_TAIL
    rate: float


@dataclass(frozen=True)
class MakespanGrid:
    """Stage values M_{i:n} sampled on t = 0, h, ..., T_close.

    Row i of ``values`` is the stage where tasks i..n-1 (processing order)
    remain and task i is in progress.
    """

    lengths: Tuple[float, ...]
    h: float
    t_close: float
    values: np.ndarray  # shape (n, N_close + 1)
    tail_closure: TailClosure

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[1]) * self.h

    def makespan(self) -> float:
        return float(self.values[0, 0])

    def remaining_work(self, stage: int) -> float:
        return float(sum(self.lengths[stage:]))


def _constant_tail_value(lam_inf: float, lengths) -> float:
    if lam_inf == 0.0:
        return float(sum(lengths))
    return float(sum(math.expm1(lam_inf * a) / lam_inf for a in lengths))


def _lerp(table: np.ndarray, pos: np.ndarray) -> np.ndarray:
    base = np.minimum(np.floor(pos).astype(np.int64), table.size - 2)
    frac = pos - base
    return table[base] * (1.0 - frac) + table[base + 1] * frac


def _lerp_scalar(table: np.ndarray, pos: float) -> float:
    base = min(int(pos), table.size - 2)
    frac = pos - base
    return table[base] * (1.0 - frac) + table[base + 1] * frac


def default_clamp_horizon(batch: TaskBatch) -> float:
    return max(10.0 * batch.total, 100.0)


def resolve_closure(model, batch: TaskBatch,
                    t_close: Optional[float] = None,
                    allow_clamp: bool = False) -> Tuple[float, str]:
    """Pick the closure horizon and label it exact or clamped."""
    meta = rates.metadata(model)
    t0 = meta.tail_time_t0
    if t_close is None:
        if t0 is not None:
            return float(t0), EXACT_TAIL
        if allow_clamp:
            return default_clamp_horizon(batch), CLAMPED_TAIL
        raise MissingClosureError(
            "the rate never becomes constant; pass an explicit t_close "
            "to accept a clamped tail")
    kind = EXACT_TAIL if (t0 is not None and t_close >= t0 - 1e-12) else CLAMPED_TAIL
    return float(t_close), kind


def solve_chain(model, batch: TaskBatch, perm: Optional[Permutation] = None,
                h: float = 1e-2, t_close: Optional[float] = None,
                allow_clamp: bool = False) -> MakespanGrid:
    """Solve the chain of stage equations on a uniform grid.

    ``t_close`` must be at or beyond the time the rate becomes constant for
    an exact tail; otherwise the rate is clamped to lam(T_close) beyond the
    horizon and the grid is labeled as clamped.
    """
    if perm is None:
        perm = Permutation.identity(batch.n)
    lengths = perm.apply(batch)
    n = len(lengths)
    if h <= 0:
        raise DomainError("h must be positive")
    if n == 0:
        return MakespanGrid((), h, 0.0, np.zeros((0, 1)), TailClosure(EXACT_TAIL, 0.0))
    if h > min(lengths):
        raise StepTooCoarseError(
            f"h={h} exceeds the shortest task length {min(lengths)}")

    t_close_req, tail_kind = resolve_closure(model, batch, t_close, allow_clamp)
    n_close = int(math.ceil(t_close_req / h - 1e-9)) if t_close_req > 0 else 0
    tcg = n_close * h
    a_total = float(sum(lengths))
    n_ext = n_close + int(math.ceil(a_total / h + 1e-9)) + 2
    x = np.arange(n_ext + 1) * h
    lam_inf = float(rates.rate(model, tcg))

    def cum0_hat(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        inside = np.minimum(pts, tcg)
        base = np.asarray(rates.cumulative_from_zero(model, inside), dtype=float)
        return base + lam_inf * np.maximum(pts - tcg, 0.0)

    e_nodes = cum0_hat(x)
    if e_nodes[-1] > _MAX_LOG_MASS:
        raise StepTooCoarseError(
            "cumulative intensity over the solve horizon is too large for "
            "the exponential rescaling; reduce t_close or the rate scale")
    lam_r = np.where(x < tcg, np.asarray(rates.rate(model, np.minimum(x, tcg), "right")), lam_inf)
    lam_l = np.where(x <= tcg, np.asarray(rates.rate(model, np.minimum(x, tcg), "left")), lam_inf)
    guard = 0.5 * h * float(np.max(lam_r))
    if guard >= 0.5:
        raise StepTooCoarseError(
            f"(h/2)*max rate = {guard:.3g} >= 0.5; halve the step")

    exp_e = np.exp(e_nodes)
    decay = np.exp(-e_nodes)
    q_r = lam_r * decay
    q_l = lam_l * decay

    # backward cumulative trapezoid tables for the (s - t) integrand parts
    p0 = 0.5 * h * (q_r[:-1] + q_l[1:])
    p1 = 0.5 * h * (q_r[:-1] * x[:-1] + q_l[1:] * x[1:])
    q0_tail = np.concatenate((np.cumsum(p0[::-1])[::-1], [0.0]))
    q1_tail = np.concatenate((np.cumsum(p1[::-1])[::-1], [0.0]))

    ks = np.arange(n_close)
    tk = x[:n_close]
    cdiv = 1.0 - 0.5 * h * lam_r[:n_close]

    values = np.empty((n, n_close + 1))
    k_tables: Dict[int, np.ndarray] = {}

    for i in range(n - 1, -1, -1):
        rem = lengths[i:]
        offs = np.cumsum(np.asarray(rem, dtype=float))
        a_rem = float(offs[-1])
        c_tail = _constant_tail_value(lam_inf, rem)

        m_vals = np.empty(n_ext + 1)
        m_vals[n_close:] = c_tail
        ktab = np.zeros(n_ext + 1)
        if n_ext > n_close:
            panels = 0.5 * h * c_tail * (q_r[n_close:n_ext] + q_l[n_close + 1:n_ext + 1])
            ktab[n_close:n_ext] = np.cumsum(panels[::-1])[::-1]

        if n_close > 0:
            surv = np.exp(e_nodes[ks] - cum0_hat(tk + a_rem))
            tail_term = a_rem * surv
            pos_end = ks + a_rem / h
            d_part = ((q1_tail[ks] - _lerp(q1_tail, pos_end))
                      - tk * (q0_tail[ks] - _lerp(q0_tail, pos_end)))
            s3 = np.zeros(n_close)
            for m in range(1, n - i):
                kj = k_tables[i + m]
                s3 += (_lerp(kj, ks + offs[m - 1] / h)
                       - _lerp(kj, ks + offs[m] / h))
            first_off = offs[0] / h
            for k in range(n_close - 1, -1, -1):
                tap = _lerp_scalar(ktab, k + first_off)
                known = ktab[k + 1] + 0.5 * h * q_l[k + 1] * m_vals[k + 1]
                inner = known - tap + s3[k] + d_part[k]
                val = (tail_term[k] + exp_e[k] * inner) / cdiv[k]
                m_vals[k] = val
                ktab[k] = known + 0.5 * h * q_r[k] * val

        values[i] = m_vals[:n_close + 1]
        k_tables[i] = ktab

    return MakespanGrid(tuple(lengths), h, tcg, values,
                        TailClosure(tail_kind, lam_inf))


@dataclass(frozen=True)
class ExactResult:
    """Outcome of grid refinement: the value and how it was reached."""

    value: float
    h: float
    t_close: float
    tail_closure: TailClosure
    history: Tuple[Tuple[float, float], ...]
    grid: MakespanGrid

    @property
    def converged(self) -> bool:
        return len(self.history) >= 2


def _initial_step(model, batch: TaskBatch, lengths, t_close: float) -> float:
    h = min(min(lengths) / 4.0, max(t_close, min(lengths)) / 8.0)
    lam_hi = rates.rate_sup(model, 0.0, t_close + sum(lengths))
    if lam_hi > 0:
        while 0.5 * h * lam_hi >= 0.45:
            h /= 2.0
    return h


def refine_until(model, batch: TaskBatch, perm: Optional[Permutation] = None,
                 tol: float = 1e-4, h0: Optional[float] = None,
                 t_close: Optional[float] = None,
                 h_floor: float = 1e-8) -> ExactResult:
    """Halve the grid step until successive makespan values differ by < tol.

    Rates without a constant tail get the default clamp horizon
    max(10 * total work, 100) and a clamped-tail label.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if perm is None:
        perm = Permutation.identity(batch.n)
    lengths = perm.apply(batch)
    if not lengths:
        grid = solve_chain(model, batch, perm, h=1.0, t_close=0.0, allow_clamp=True)
        return ExactResult(0.0, 1.0, 0.0, grid.tail_closure, ((1.0, 0.0),), grid)
    tc, _ = resolve_closure(model, batch, t_close, allow_clamp=True)
    h = h0 if h0 is not None else _initial_step(model, batch, lengths, tc)
    grid = solve_chain(model, batch, perm, h=h, t_close=tc)
    history = [(h, grid.makespan())]
    while True:
        h /= 2.0
        if h < h_floor:
            raise NonConvergenceError(
                f"step underflow below {h_floor} before reaching tol={tol}",
                history)
        grid = solve_chain(model, batch, perm, h=h, t_close=tc)
        history.append((h, grid.makespan()))
        if abs(history[-1][1] - history[-2][1]) < tol:
            return ExactResult(history[-1][1], h, grid.t_close,
                               grid.tail_closure, tuple(history), grid)
