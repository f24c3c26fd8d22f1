"""Monte Carlo simulation of the preempt-repeat makespan.

A disruption wipes the in-flight task's progress; the task restarts from
scratch at the disruption time and all wasted work counts toward the
makespan.  Repair takes no time.  Replications are driven by per-replication
counter streams and processed in fixed-size chunks, so estimates are
bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import rates
from .errors import DivergenceError, DomainError
from .rng import (RngStream, exponential_at, seed_base_int, uniform_at,
                  uniform_scalar)
from .sampling import INVERSION, THINNING
from .tasks import Permutation, TaskBatch

_CHUNK = 1 << 16
_SCALAR_SWITCH = 128  # below this many active reps, rounds go scalar
DEFAULT_RESTART_CAP = 10 ** 6


@dataclass(frozen=True)
class SimOutcome:
    """One replication: realized makespan and restart counts per task slot."""

    makespan: float
    restarts_per_task: Tuple[int, ...]

    @property
    def total_restarts(self) -> int:
        return sum(self.restarts_per_task)


@dataclass(frozen=True)
class MakespanEstimate:
    """Monte Carlo summary of the makespan distribution."""

    mean: float
    std_error: float
    replications: int
    mean_restarts: float
    max_restarts: int
    max_makespan: float


def _expected_attempts(model, length: float) -> float:
    meta = rates.metadata(model)
    lam_hi = meta.lambda_bar * meta.f_plus
    if not math.isfinite(lam_hi):
        return math.inf
    return math.exp(lam_hi * length)


def _chunk_preempt_repeat(model, lengths: Sequence[float], seed: int,
                          stream_lo: int, m: int, method: str,
                          restart_cap: int, counter0: int = 0,
                          track_tasks: bool = False):
    """Simulate ``m`` replications on streams [stream_lo, stream_lo + m).

    State arrays stay dense: finished replications are written out and
    compacted away, so each round costs O(active replications).
    """
    n = len(lengths)
    lengths_arr = np.asarray(lengths, dtype=float)
    makespan = np.zeros(m)
    restarts_out = np.zeros(m, dtype=np.int64)
    per_task = np.zeros((m, n), dtype=np.int64) if track_tasks else None
    counters_out = np.full(m, counter0, dtype=np.uint64)
    if n == 0:
        return makespan, restarts_out, per_task, counters_out
    next_arrival = rates.fast_next_arrival(model)

    orig = np.arange(m)
    strm = np.arange(stream_lo, stream_lo + m, dtype=np.uint64)
    base = stream_base(seed, strm)
    ctr = np.full(m, counter0, dtype=np.uint64)
    t = np.zeros(m)
    task = np.zeros(m, dtype=np.int64)
    attempts = np.zeros(m, dtype=np.int64)
    restarts = np.zeros(m, dtype=np.int64)

    thinning = method == THINNING
    if thinning:
        meta = rates.metadata(model)
        lam_max = meta.lambda_bar * meta.f_plus
        if not math.isfinite(lam_max):
            raise DomainError(
                "thinning simulation needs a finite majorant (f_plus)")
        if lam_max == 0.0:
            makespan[:] = lengths_arr.sum()
            return makespan, restarts_out, per_task, counters_out
        clock = np.zeros(m)

    while orig.size > _SCALAR_SWITCH:
        a = lengths_arr[task]
        horizon = t + a
        if not thinning:
            e = exponential_at(seed, strm, ctr)
            ctr += 1
            nxt = np.asarray(inverse(cum0(t) + e))
            failed = nxt < horizon
            decided_ok = ~failed
            if failed.any():
                t = np.where(failed, nxt, t)
        else:
            gap = exponential_at(seed, strm, ctr) / lam_max
            ctr += 1
            cnew = clock + gap
            inside = cnew < horizon
            accepted = np.zeros(orig.size, dtype=bool)
            if inside.any():
                u = uniform_at(seed, strm[inside], ctr[inside])
                ctr[inside] += 1
                lam_here = np.asarray(rates.rate(model, cnew[inside]))
                accepted[inside] = u * lam_max <= lam_here
            clock = cnew
            failed = accepted
            decided_ok = ~inside
            if failed.any():
                t = np.where(failed, cnew, t)
                clock = np.where(failed, cnew, clock)

        if failed.any():
            attempts = np.where(failed, attempts + 1, attempts)
            restarts += failed
            if track_tasks:
                rows = orig[failed]
                per_task[rows, task[failed]] += 1
            if np.max(attempts) > restart_cap:
                bad = int(np.argmax(attempts))
                slot = int(task[bad])
                raise DivergenceError(
                    task_index=slot, replication=int(strm[bad]),
                    cap=restart_cap,
                    expected_attempts=_expected_attempts(model, lengths_arr[slot]))
        if decided_ok.any():
            t = np.where(decided_ok, horizon, t)
            task = task + decided_ok
            attempts = np.where(decided_ok, 0, attempts)
            if thinning:
                clock = np.where(decided_ok, t, clock)
            finished = task >= n
            if finished.any():
                rows = orig[finished]
                makespan[rows] = t[finished]
                restarts_out[rows] = restarts[finished]
                counters_out[rows] = ctr[finished]
                keep = ~finished
                orig, strm, ctr = orig[keep], strm[keep], ctr[keep]
                t, task = t[keep], task[keep]
                attempts, restarts = attempts[keep], restarts[keep]
                if thinning:
                    clock = clock[keep]

    # straggler phase: per-replication scalar walks (bit-identical draws)
    if orig.size:
        sb = seed_base_int(seed)
        cum0_s = rates.fast_scalar_cumulative0(model)
        inv_s = rates.fast_scalar_inverse_or_inf(model)
        lens = tuple(float(v) for v in lengths_arr)
        for j in range(orig.size):
            row = int(orig[j])
            stream = int(strm[j])
            c = int(ctr[j])
            tj = float(t[j])
            kj = int(task[j])
            att = int(attempts[j])
            rst = int(restarts[j])
            ck = float(clock[j]) if thinning else 0.0
            while kj < n:
                aj = lens[kj]
                if not thinning:
                    u = uniform_scalar(sb, stream, c)
                    c += 1
                    nxt = inv_s(cum0_s(tj) - math.log(u))
                    if nxt >= tj + aj:
                        tj += aj
                        kj += 1
                        att = 0
                        continue
                    tj = nxt
                else:
                    u = uniform_scalar(sb, stream, c)
                    c += 1
                    ck -= math.log(u) / lam_max
                    if ck >= tj + aj:
                        tj += aj
                        kj += 1
                        att = 0
                        ck = tj
                        continue
                    u2 = uniform_scalar(sb, stream, c)
                    c += 1
                    if u2 * lam_max > float(rates.rate(model, ck)):
                        continue
                    tj = ck
                att += 1
                rst += 1
                if track_tasks:
                    per_task[row, kj] += 1
                if att > restart_cap:
                    raise DivergenceError(
                        task_index=kj, replication=stream, cap=restart_cap,
                        expected_attempts=_expected_attempts(model, aj))
            makespan[row] = tj
            restarts_out[row] = rst
            counters_out[row] = c
    return makespan, restarts_out, per_task, counters_out


def simulate_makespan(model, batch: TaskBatch, perm: Permutation,
                      rng: RngStream, method: str = INVERSION,
                      restart_cap: int = DEFAULT_RESTART_CAP) -> SimOutcome:
    """Simulate one replication of the preempt-repeat makespan."""
    lengths = perm.apply(batch)
    makespan, _, per_task, counters = _chunk_preempt_repeat(
        model, lengths, rng.seed, rng.stream_index, 1, method,
        restart_cap, counter0=rng.counter, track_tasks=True)
    rng.counter = int(counters[0])
    return SimOutcome(float(makespan[0]), tuple(int(c) for c in per_task[0]))


def makespan_on_path(batch: TaskBatch, perm: Permutation,
                     arrivals: Sequence[float]) -> SimOutcome:
    """Replay the makespan walk against a fixed ascending arrival path.

    The caller must supply a path long enough to cover the whole walk;
    once the path is exhausted no further disruption occurs.
    """
    lengths = perm.apply(batch)
    arr = list(arrivals)
    t, k = 0.0, 0
    restarts = [0] * len(lengths)
    for slot, a in enumerate(lengths):
        while True:
            while k < len(arr) and arr[k] <= t:
                k += 1
            s = arr[k] if k < len(arr) else math.inf
            if s >= t + a:
                t += a
                break
            restarts[slot] += 1
            t = s
            k += 1
    return SimOutcome(t, tuple(restarts))


def single_failure_makespan(batch: TaskBatch, perm: Permutation,
                            first_arrival: float) -> float:
    """Makespan when at most the one given disruption can occur."""
    lengths = np.asarray(perm.apply(batch))
    total = float(lengths.sum())
    if first_arrival >= total or math.isinf(first_arrival):
        return total
    bounds = np.cumsum(lengths)
    i = int(np.searchsorted(bounds, first_arrival, side="right"))
    before = float(bounds[i - 1]) if i > 0 else 0.0
    return first_arrival + (total - before)


def simulate_single_failure(model, batch: TaskBatch, perm: Permutation,
                            rng: RngStream) -> SimOutcome:
    """Simulate the at-most-one-failure model for one replication."""
    from .sampling import arrival_from_exponential

    s = arrival_from_exponential(model, 0.0, -math.log(rng.uniform()))
    value = single_failure_makespan(batch, perm, s)
    lengths = perm.apply(batch)
    restarts = [0] * len(lengths)
    total = sum(lengths)
    if s < total and lengths:
        bounds = np.cumsum(np.asarray(lengths))
        restarts[int(np.searchsorted(bounds, s, side="right"))] += 1
    return SimOutcome(value, tuple(restarts))


@dataclass
class _Agg:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    restarts: float = 0.0
    max_restarts: int = 0
    max_makespan: float = -math.inf

    def absorb(self, other: "_Agg") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
        else:
            tot = self.count + other.count
            delta = other.mean - self.mean
            self.mean += delta * other.count / tot
            self.m2 += other.m2 + delta * delta * self.count * other.count / tot
            self.count = tot
        self.restarts += other.restarts
        self.max_restarts = max(self.max_restarts, other.max_restarts)
        self.max_makespan = max(self.max_makespan, other.max_makespan)


def _aggregate_chunk(makespan: np.ndarray, restarts: np.ndarray) -> _Agg:
    mean = float(np.mean(makespan))
    return _Agg(
        count=makespan.size,
        mean=mean,
        m2=float(np.sum((makespan - mean) ** 2)),
        restarts=float(np.sum(restarts)),
        max_restarts=int(np.max(restarts)),
        max_makespan=float(np.max(makespan)),
    )


def _finalize(agg: _Agg) -> MakespanEstimate:
    n = agg.count
    var = agg.m2 / (n - 1) if n > 1 else 0.0
    return MakespanEstimate(
        mean=agg.mean,
        std_error=math.sqrt(max(var, 0.0) / n),
        replications=n,
        mean_restarts=agg.restarts / n,
        max_restarts=agg.max_restarts,
        max_makespan=agg.max_makespan,
    )


def _run_chunks(worker, replications: int, parallelism: Optional[int]) -> _Agg:
    """Run fixed-size chunks, combining results in chunk order."""
    chunks: List[Tuple[int, int]] = []
    lo = 0
    while lo < replications:
        hi = min(lo + _CHUNK, replications)
        chunks.append((lo, hi - lo))
        lo = hi
    agg = _Agg()
    workers = int(parallelism or 1)
    if workers <= 1 or len(chunks) == 1:
        for lo, m in chunks:
            agg.absorb(worker(lo, m))
        return agg
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(lambda c: worker(*c), chunks):
            agg.absorb(part)
    return agg


def estimate_makespan(model, batch: TaskBatch, perm: Permutation,
                      replications: int, seed: int,
                      parallelism: Optional[int] = None,
                      method: str = INVERSION,
                      restart_cap: int = DEFAULT_RESTART_CAP) -> MakespanEstimate:
    """Mean and standard error of the makespan over independent streams.

    Streams are indexed 0..replications-1, so the estimate is independent
    of the worker count and of chunk scheduling.
    """
    if replications < 2:
        raise DomainError("need at least 2 replications")
    lengths = perm.apply(batch)

    def worker(lo: int, m: int) -> _Agg:
        makespan, restarts, _, _ = _chunk_preempt_repeat(
            model, lengths, seed, lo, m, method, restart_cap)
        return _aggregate_chunk(makespan, restarts)

    return _finalize(_run_chunks(worker, replications, parallelism))


def estimate_single_failure(model, batch: TaskBatch, perm: Permutation,
                            replications: int, seed: int,
                            parallelism: Optional[int] = None) -> MakespanEstimate:
    """Monte Carlo estimate under the at-most-one-failure protocol."""
    if replications < 2:
        raise DomainError("need at least 2 replications")
    lengths = np.asarray(perm.apply(batch), dtype=float)
    total = float(lengths.sum())
    bounds = np.cumsum(lengths)
    starts = np.concatenate(([0.0], bounds[:-1]))

    def worker(lo: int, m: int) -> _Agg:
        streams = np.arange(lo, lo + m, dtype=np.uint64)
        e = exponential_at(seed, streams, np.zeros(m, dtype=np.uint64))
        s = np.asarray(rates.inverse_cumulative_or_inf(model, e))
        makespan = np.full(m, total)
        hit = s < total
        if hit.any():
            i = np.searchsorted(bounds, s[hit], side="right")
            makespan[hit] = s[hit] + (total - starts[i])
        return _aggregate_chunk(makespan, hit.astype(np.int64))

    return _finalize(_run_chunks(worker, replications, parallelism))
