"""Sequencing and makespan analysis for a single machine whose disruptions
follow a non-homogeneous Poisson process, under preempt-repeat semantics."""

from .errors import (DivergenceError, DomainError, InvalidModelError,
                     MissingClosureError, NonConvergenceError,
                     StepTooCoarseError, UnreachableMassError)
from .rates import (AnalyticRate, Monotonicity, RateMetadata, RateModel,
                    bathtub, concave_increasing, constant, convex_decreasing,
                    cumulative_intensity, inverse_cumulative, linear_decreasing,
                    linear_increasing, metadata, piecewise_constant, rate,
                    sinusoidal, step_decreasing, step_increasing,
                    two_phase_constant, zero_rate, zero_then_constant)
from .rng import RngStream
from .sampling import (next_arrival_inversion, next_arrival_thinning,
                       sample_path)
from .simulate import (MakespanEstimate, SimOutcome, estimate_makespan,
                       estimate_single_failure, makespan_on_path,
                       simulate_makespan, simulate_single_failure)
from .single_failure import (SingleFailureResult, density_monotonicity,
                             expected_makespan_single_failure,
                             first_failure_density, pairwise_difference)
from .solver import (ExactResult, MakespanGrid, TailClosure,
                     constant_rate_batch, constant_rate_single, refine_until,
                     solve_chain, two_phase_delta,
                     zero_then_constant_two_task)
from .tasks import (Permutation, PrecedenceSpec, TaskBatch,
                    best_sequence_exhaustive, lpt, relative_sort, spt)
from .theory import (BoundsReport, OrderInvarianceReport, ShortTaskSpec,
                     ThresholdReport, check_grid_bounds,
                     order_invariance_check, rate_scale_threshold,
                     short_task_slope_threshold, two_task_cutoffs,
                     weighted_intensity_sum)

__version__ = "0.1.0"
