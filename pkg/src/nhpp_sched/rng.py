"""Counter-based uniform random numbers with per-replication streams.

Every draw is a pure function of (seed, stream_index, counter), so a
replication's draw sequence is reproducible bit-for-bit no matter how
replications are batched or spread over workers.  The mixing function is
the splitmix64 finalizer applied twice, which is the usual construction
for hash-based Monte Carlo streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STIR = np.uint64(0x243F6A8885A308D3)
_STREAM_SALT = np.uint64(0xC2B2AE3D27D4EB4F)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

_U53_SCALE = float(2.0 ** -53)
_U54_HALF = float(2.0 ** -54)


def _mix64(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps mod 2**64 by design
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def _seed_base(seed: int) -> np.uint64:
    with np.errstate(over="ignore"):
        return _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * _GOLDEN + _STIR)


def stream_base(seed: int, stream: np.ndarray) -> np.ndarray:
    """Per-stream 64-bit base: a mixed seed xor'd with the salted stream."""
    with np.errstate(over="ignore"):
        return _mix64(_seed_base(seed)
                      ^ (np.asarray(stream, dtype=np.uint64) * _STREAM_SALT))


def uniform_from_base(base: np.ndarray, counter: np.ndarray) -> np.ndarray:
    """Uniform(0, 1) from precomputed stream bases and a counter array.

    One finalizer round over (base xor Weyl(counter)); the xor injection
    keeps distinct streams off each other's counter orbits.
    """
    with np.errstate(over="ignore"):
        word = _mix64(base ^ ((np.asarray(counter, dtype=np.uint64)
                               + np.uint64(1)) * _GOLDEN))
    return (word >> np.uint64(11)).astype(np.float64) * _U53_SCALE + _U54_HALF


def uniform_at(seed: int, stream: np.ndarray, counter: np.ndarray) -> np.ndarray:
    """Uniform(0, 1) draw for each (stream, counter) pair under one seed.

    Vectorized over numpy uint64 arrays; scalars are handled by numpy's
    broadcasting.  The result never hits 0.0 or 1.0 exactly.
    """
    return uniform_from_base(stream_base(seed, stream), counter)


def exponential_at(seed: int, stream: np.ndarray, counter: np.ndarray) -> np.ndarray:
    """Standard exponential draw for each (stream, counter) pair."""
    return -np.log(uniform_at(seed, stream, counter))


_M64 = (1 << 64) - 1
_GOLDEN_I = 0x9E3779B97F4A7C15
_STIR_I = 0x243F6A8885A308D3
_SALT_I = 0xC2B2AE3D27D4EB4F


def _mix64_int(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def seed_base_int(seed: int) -> int:
    return _mix64_int(((seed & _M64) * _GOLDEN_I + _STIR_I) & _M64)


def stream_base_int(seed: int, stream: int) -> int:
    return _mix64_int(seed_base_int(seed) ^ ((stream * _SALT_I) & _M64))


def uniform_scalar(base: int, counter: int) -> float:
    """Pure-Python scalar twin of :func:`uniform_from_base`, bit-identical.

    ``base`` is the precomputed :func:`stream_base_int` value; used on the
    simulation straggler path where numpy call overhead dominates.
    """
    word = _mix64_int(base ^ (((counter + 1) * _GOLDEN_I) & _M64))
    return (word >> 11) * _U53_SCALE + _U54_HALF


@dataclass
class RngStream:
    """One replication's stream: (seed, stream_index) plus a draw counter.

    Identical (seed, stream_index) reproduce the same sequence exactly;
    distinct stream indices give statistically independent streams.  A
    stream is meant to be owned by a single replication at a time.
    """

    seed: int
    stream_index: int = 0
    counter: int = field(default=0)

    def uniform(self) -> float:
        u = uniform_scalar(stream_base_int(self.seed, self.stream_index),
                           self.counter)
        self.counter += 1
        return u

    def exponential(self) -> float:
        return -float(np.log(self.uniform()))
