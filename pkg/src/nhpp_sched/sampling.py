"""NHPP arrival sampling by cumulative-intensity inversion and by thinning.

Both methods draw through the counter-based uniform generator, so a path is
a pure function of (seed, stream_index) and replications can be batched or
parallelized without changing any draw.
"""

from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from . import rates
from .errors import DomainError, UnreachableMassError
from .rng import RngStream, exponential_at, uniform_at

INVERSION = "inversion"
THINNING = "thinning"

_WINDOW = 1.0  # thinning window width for rates without a finite majorant


def arrival_from_exponential(model, t: float, e: float) -> float:
    """Next-arrival time after ``t`` given a standard-exponential draw ``e``.

    Pure inversion arithmetic: the next point sits where the cumulative
    intensity from ``t`` first reaches ``e``.  Returns +inf when the rate's
    remaining mass is below ``e``.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    target = float(rates.cumulative_from_zero(model, t)) + e
    out = rates.inverse_cumulative_or_inf(model, np.asarray(target))
    nxt = float(np.asarray(out).item())
    return max(nxt, t)


def next_arrival_inversion(model, t: float, rng: RngStream) -> float:
    """Draw the next NHPP arrival strictly after ``t`` by inversion."""
    nxt = arrival_from_exponential(model, t, -math.log(rng.uniform()))
    if math.isinf(nxt):
        raise UnreachableMassError(
            "rate has finite total mass; no further arrival exists")
    return nxt


def _majorant(model) -> float:
    meta = rates.metadata(model)
    return meta.lambda_bar * meta.f_plus


def _thinning_or_inf(model, t: float, rng: RngStream,
                     give_up_at: float = math.inf) -> float:
    """Thinning walk from ``t``; +inf once the clock passes ``give_up_at``
    or the rate's remaining mass is exhausted."""
    total = rates.total_mass(model)
    lam_max = _majorant(model)
    if math.isfinite(lam_max):
        if lam_max == 0.0:
            return math.inf
        clock = t
        while True:
            if clock > give_up_at:
                return math.inf
            if math.isfinite(total) and \
                    total - float(rates.cumulative_from_zero(model, clock)) < 1e-15:
                return math.inf
            gap = -math.log(rng.uniform()) / lam_max
            clock = clock + gap
            u = rng.uniform()
            if u * lam_max <= float(rates.rate(model, clock)):
                return clock
    meta = rates.metadata(model)
    if meta.monotonicity.direction != "increasing":
        raise UnreachableMassError(
            "thinning needs a finite majorant (f_plus unavailable)")
    clock, w_end = t, t + _WINDOW
    while True:
        if clock > give_up_at:
            return math.inf
        lam_w = rates.rate_sup(model, clock, w_end)
        if lam_w == 0.0:
            clock, w_end = w_end, w_end + _WINDOW
            continue
        gap = -math.log(rng.uniform()) / lam_w
        if clock + gap > w_end:
            clock, w_end = w_end, w_end + _WINDOW
            continue
        clock = clock + gap
        u = rng.uniform()
        if u * lam_w <= float(rates.rate(model, clock)):
            return clock


def next_arrival_thinning(model, t: float, rng: RngStream) -> float:
    """Draw the next NHPP arrival after ``t`` by accept/reject thinning.

    Uses the global majorant lambda_bar * f_plus.  Rates with an infinite
    shape supremum are handled with a windowed majorant when the rate is
    monotone increasing (the window supremum is exact); otherwise thinning
    is refused.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    nxt = _thinning_or_inf(model, t, rng)
    if math.isinf(nxt):
        raise UnreachableMassError(
            "rate has finite total mass; no further arrival exists")
    return nxt


def sample_path(model, horizon: float, method: str = INVERSION,
                rng: RngStream = None) -> List[float]:
    """Ascending NHPP arrival times in [0, horizon]."""
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    if rng is None:
        rng = RngStream(0)
    if method not in (INVERSION, THINNING):
        raise DomainError(f"unknown sampling method {method!r}")
    out: List[float] = []
    t = 0.0
    while True:
        if method == INVERSION:
            nxt = arrival_from_exponential(model, t, -math.log(rng.uniform()))
        else:
            nxt = _thinning_or_inf(model, t, rng, give_up_at=horizon)
        if nxt > horizon or math.isinf(nxt):
            return out
        if not out or nxt > out[-1]:
            out.append(nxt)
        t = nxt


# -- vectorized helpers (test oracles and the simulation engine) --------------

def first_arrivals(model, n_paths: int, seed: int, method: str = INVERSION,
                   t: float = 0.0, stream_offset: int = 0) -> np.ndarray:
    """First arrival after ``t`` for ``n_paths`` independent streams."""
    streams = np.arange(stream_offset, stream_offset + n_paths, dtype=np.uint64)
    if method == INVERSION:
        e = exponential_at(seed, streams, np.zeros(n_paths, dtype=np.uint64))
        base = float(rates.cumulative_from_zero(model, t))
        return rates.inverse_cumulative_or_inf(model, base + e)
    if method != THINNING:
        raise DomainError(f"unknown sampling method {method!r}")
    lam_max = _majorant(model)
    counters = np.zeros(n_paths, dtype=np.uint64)
    result = np.full(n_paths, np.nan)
    total = rates.total_mass(model)
    if math.isfinite(lam_max):
        if lam_max == 0.0:
            return np.full(n_paths, np.inf)
        clock = np.full(n_paths, float(t))
        idx = np.arange(n_paths)
        while idx.size:
            st = streams[idx]
            gap = exponential_at(seed, st, counters[idx]) / lam_max
            counters[idx] += 1
            clock[idx] = clock[idx] + gap
            u = uniform_at(seed, st, counters[idx])
            counters[idx] += 1
            lam_here = np.asarray(rates.rate(model, clock[idx]))
            accepted = u * lam_max <= lam_here
            result[idx[accepted]] = clock[idx[accepted]]
            idx = idx[~accepted]
            if math.isfinite(total) and idx.size:
                used = np.asarray(rates.cumulative_from_zero(model, clock[idx]))
                dead = total - used < 1e-15
                result[idx[dead]] = np.inf
                idx = idx[~dead]
        return result
    meta = rates.metadata(model)
    if meta.monotonicity.direction != "increasing":
        raise UnreachableMassError(
            "thinning needs a finite majorant (f_plus unavailable)")
    # windowed majorant; scalar loop is fine at test scales
    for i in range(n_paths):
        rng = RngStream(seed, stream_offset + i)
        result[i] = _thinning_or_inf(model, t, rng)
    return result


def path_counts(model, horizon: float, n_paths: int, seed: int,
                stream_offset: int = 0) -> np.ndarray:
    """Arrival counts on [0, horizon] for ``n_paths`` inversion paths."""
    streams = np.arange(stream_offset, stream_offset + n_paths, dtype=np.uint64)
    counters = np.zeros(n_paths, dtype=np.uint64)
    t = np.zeros(n_paths)
    counts = np.zeros(n_paths, dtype=np.int64)
    idx = np.arange(n_paths)
    while idx.size:
        e = exponential_at(seed, streams[idx], counters[idx])
        counters[idx] += 1
        base = np.asarray(rates.cumulative_from_zero(model, t[idx]))
        nxt = rates.inverse_cumulative_or_inf(model, base + e)
        inside = nxt <= horizon
        hit = idx[inside]
        counts[hit] += 1
        t[hit] = nxt[inside]
        idx = hit
    return counts
