"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MetricSpaceError(Exception):
    """Base class for all errors raised by this library."""


class StructuralError(MetricSpaceError, ValueError):
    """Shape, dimension, chart, or identifier mismatch."""


class DomainError(MetricSpaceError, ValueError):
    """Numerical-domain violation: SPD floor breached, nonpositive density."""


class PreconditionError(DomainError):
    """An operation precondition failed; carries the worst offending point."""

    def __init__(self, message: str, point_id: str | None = None):
        super().__init__(message)
        self.point_id = point_id


class BoundaryError(DomainError):
    """A geodesic left its admissible domain; names the first bad point."""

    def __init__(self, message: str, point_id: str | None = None):
        super().__init__(message)
        self.point_id = point_id


class OptimizerStallError(MetricSpaceError):
    """Backtracking could not restore admissibility at the minimum step.

    The best admissible iterate seen so far is attached so callers can
    still report an upper bound.
    """

    def __init__(
        self,
        message: str,
        best_length: float | None = None,
        best_frames=None,
        point_id: str | None = None,
    ):
        super().__init__(message)
        self.best_length = best_length
        self.best_frames = best_frames
        self.point_id = point_id
