"""Exception and warning types shared across the package."""

from __future__ import annotations


class ChartDegeneracyError(ValueError):
    """Raised when a phase point sits on the coordinate singularity 1 + zeta*eta = 0."""


class ZeroCouplingError(ValueError):
    """Raised when an operation requires lambda != 0 (cubic reduction is undefined)."""


class PoleEvaluationError(ValueError):
    """Raised when an elliptic function is evaluated too close to a lattice point."""


class NonConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance.

    Carries the best residual seen so callers can report partial progress.
    """

    def __init__(self, message: str, best_residual: float = float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class BranchResolutionError(RuntimeError):
    """Raised when closed-form branch tracking cannot be continued safely."""


class RepresentationMismatchError(RuntimeError):
    """Raised when the two propagator representations disagree beyond tolerance."""

    def __init__(self, message: str, discrepancy: float):
        super().__init__(message)
        self.discrepancy = discrepancy


class DisentanglingSingularityError(RuntimeError):
    """Raised when the SU(1,1) disentangling parameters blow up (amplitude zero)."""


class TruncationWarning(UserWarning):
    """Emitted when a coherent state carries non-negligible weight above n_max."""


class MultipleSolutionWarning(UserWarning):
    """Emitted when multi-start shooting finds more than one solution basin."""
