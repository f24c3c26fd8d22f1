"""Task batches, permutations, and candidate-sequence generation.

A batch canonicalizes its lengths into ascending order (stable under ties)
and remembers where each task sat in the constructor input, so SPT/LPT
orders can be reported against the caller's original indexing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError

_EXHAUSTIVE_CAP = math.factorial(10)


@dataclass(frozen=True)
class TaskBatch:
    """Ordered task lengths in ascending canonical order with prefix sums."""

    lengths: Tuple[float, ...]
    source_indices: Tuple[int, ...]
    prefix_sums: Tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if any(a <= 0 for a in self.lengths):
            raise DomainError("task lengths must be positive")
        if any(self.lengths[i] > self.lengths[i + 1]
               for i in range(len(self.lengths) - 1)):
            raise DomainError("canonical batch lengths must be ascending")
        prefix = [0.0]
        for a in self.lengths:
            prefix.append(prefix[-1] + a)
        object.__setattr__(self, "prefix_sums", tuple(prefix[1:]))

    @classmethod
    def from_lengths(cls, lengths: Sequence[float]) -> "TaskBatch":
        order = sorted(range(len(lengths)), key=lambda i: (lengths[i], i))
        return cls(tuple(float(lengths[i]) for i in order), tuple(order))

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def total(self) -> float:
        return self.prefix_sums[-1] if self.lengths else 0.0

    def window_sum(self, i: int, j: int) -> float:
        """Sum of lengths i..j inclusive (0-based canonical indices)."""
        lo = self.prefix_sums[i - 1] if i > 0 else 0.0
        return self.prefix_sums[j] - lo

    def suffix_sums(self) -> np.ndarray:
        """Remaining work before each task: entry i is sum of lengths[i:]."""
        return np.cumsum(np.asarray(self.lengths)[::-1])[::-1].copy()


@dataclass(frozen=True)
class Permutation:
    """Processing order as canonical task indices, first-processed first."""

    order: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise DomainError("order must be a bijection on 0..n-1")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def reversal(cls, n: int) -> "Permutation":
        return cls(tuple(range(n - 1, -1, -1)))

    @classmethod
    def from_one_based(cls, order: Sequence[int]) -> "Permutation":
        return cls(tuple(int(i) - 1 for i in order))

    @property
    def n(self) -> int:
        return len(self.order)

    def apply(self, batch: TaskBatch) -> Tuple[float, ...]:
        """Lengths in processing order."""
        return tuple(batch.lengths[i] for i in self.order)

    def prefix_sums(self, batch: TaskBatch) -> np.ndarray:
        return np.cumsum(np.asarray(self.apply(batch)))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for slot, task in enumerate(self.order):
            inv[task] = slot
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        return Permutation(tuple(other.order[i] for i in self.order))

    def source_order(self, batch: TaskBatch) -> Tuple[int, ...]:
        """The processing order expressed in the caller's input indices."""
        return tuple(batch.source_indices[i] for i in self.order)

    def one_based(self) -> Tuple[int, ...]:
        return tuple(i + 1 for i in self.order)


@dataclass(frozen=True)
class PrecedenceSpec:
    """Fixed slots (slot index -> task index) partitioned from free tasks."""

    n: int
    fixed: Tuple[Tuple[int, int], ...] = ()

    @classmethod
    def make(cls, n: int, fixed: Optional[Mapping[int, int]] = None) -> "PrecedenceSpec":
        return cls(n, tuple(sorted((fixed or {}).items())))

    def __post_init__(self):
        slots = [s for s, _ in self.fixed]
        tasks = [t for _, t in self.fixed]
        if len(set(slots)) != len(slots) or len(set(tasks)) != len(tasks):
            raise DomainError("fixed slots and tasks must be distinct")
        if any(not (0 <= s < self.n) for s in slots):
            raise DomainError("fixed slot out of range")
        if any(not (0 <= t < self.n) for t in tasks):
            raise DomainError("fixed task out of range")

    @property
    def free_tasks(self) -> Tuple[int, ...]:
        taken = {t for _, t in self.fixed}
        return tuple(t for t in range(self.n) if t not in taken)

    @property
    def free_slots(self) -> Tuple[int, ...]:
        taken = {s for s, _ in self.fixed}
        return tuple(s for s in range(self.n) if s not in taken)

    def assemble(self, free_in_order: Sequence[int]) -> Permutation:
        order = [-1] * self.n
        for s, t in self.fixed:
            order[s] = t
        for s, t in zip(self.free_slots, free_in_order):
            order[s] = t
        return Permutation(tuple(order))


def spt(batch: TaskBatch) -> Permutation:
    """Shortest processing time first; ties by ascending original index."""
    key = lambda i: (batch.lengths[i], batch.source_indices[i])
    return Permutation(tuple(sorted(range(batch.n), key=key)))


def lpt(batch: TaskBatch) -> Permutation:
    """Longest processing time first; ties by ascending original index."""
    key = lambda i: (-batch.lengths[i], batch.source_indices[i])
    return Permutation(tuple(sorted(range(batch.n), key=key)))


def relative_sort(batch: TaskBatch, spec: PrecedenceSpec,
                  order: str = "SPT") -> Permutation:
    """Sort the freely-permutable tasks into the free slots; fixed tasks stay."""
    if spec.n != batch.n:
        raise DomainError("precedence spec and batch sizes differ")
    if order not in ("SPT", "LPT"):
        raise DomainError("order must be 'SPT' or 'LPT'")
    sign = 1 if order == "SPT" else -1
    free = sorted(spec.free_tasks,
                  key=lambda i: (sign * batch.lengths[i], batch.source_indices[i]))
    return spec.assemble(free)


def feasible_permutations(n: int, spec: Optional[PrecedenceSpec] = None):
    """All processing orders honoring the fixed slots, in deterministic order."""
    if spec is None:
        yield from (Permutation(p) for p in itertools.permutations(range(n)))
        return
    for free in itertools.permutations(spec.free_tasks):
        yield spec.assemble(free)


def count_feasible(n: int, spec: Optional[PrecedenceSpec] = None) -> int:
    return math.factorial(n if spec is None else len(spec.free_tasks))


def best_sequence_exhaustive(evaluator: Callable[[Permutation], float],
                             batch: TaskBatch,
                             spec: Optional[PrecedenceSpec] = None,
                             ) -> Tuple[Permutation, float]:
    """Strict argmin of ``evaluator`` over all feasible permutations.

    Deterministic tie-break: the first permutation in scan order wins, and
    the scan is lexicographic, so ties resolve to the lexicographically
    smallest order.
    """
    if count_feasible(batch.n, spec) > _EXHAUSTIVE_CAP:
        raise DomainError(
            "too many permutations to scan exhaustively; "
            "use the SPT/LPT heuristics instead")
    best: Optional[Permutation] = None
    best_val = math.inf
    for perm in feasible_permutations(batch.n, spec):
        val = float(evaluator(perm))
        if val < best_val:
            best, best_val = perm, val
    if best is None:
        raise DomainError("no feasible permutation")
    return best, best_val
