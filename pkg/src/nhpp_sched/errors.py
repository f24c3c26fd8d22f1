"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InvalidModelError(ValueError):
    """Rate-model parameters violate the model family's constraints."""


class UnreachableMassError(ValueError):
    """A cumulative-intensity target exceeds the total mass of the rate."""


class DivergenceError(RuntimeError):
    """A simulated task exceeded the restart cap.

    Carries enough context to identify the offending task and replication.
    """

    def __init__(self, task_index: int, replication: int, cap: int,
                 expected_attempts: float):
        self.task_index = task_index
        self.replication = replication
        self.cap = cap
        self.expected_attempts = expected_attempts
        super().__init__(
            f"task {task_index} in replication {replication} exceeded the "
            f"restart cap of {cap}; the expected number of attempts is about "
            f"{expected_attempts:.3g}"
        )


class StepTooCoarseError(ValueError):
    """The solver grid step violates a stability or resolution guard."""


class MissingClosureError(ValueError):
    """The rate never becomes constant and no clamp horizon was supplied."""


class NonConvergenceError(RuntimeError):
    """Grid refinement hit its floor before reaching the tolerance."""

    def __init__(self, message: str, history=None):
        self.history = list(history or [])
        super().__init__(message)
