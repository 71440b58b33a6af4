"""Custom exception classes for the dynbound package."""

from __future__ import annotations

from typing import Any

import numpy as np


class DynboundError(Exception):
    """Base exception for dynbound errors.

    Args:
        message: Error description.
        details: Optional structured context (offending values, indices).
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details


class InvalidParams(DynboundError):
    """Graph or preset parameters are inconsistent.

    Raised for non-monotone pieces, unknown presets, or out-of-range parameters.
    """


class NotAffineFarField(DynboundError):
    """Graph is not affine with the declared slope and intercepts beyond ±M0."""


class NegativeIntercept(DynboundError):
    """Far-field intercept c0' is negative and the relaxation flag is not set."""


class GridTooSmall(DynboundError):
    """Geometry has fewer nodes than the discretization needs."""


class ShapeMismatch(DynboundError):
    """Field lengths do not match the discrete operators."""


class WrongGeometry(DynboundError):
    """Operation is defined only for a different geometry variant."""


class NotMeanZero(DynboundError):
    """Field was expected to have zero combined bulk-surface mean."""


class ForcingNotMeanZero(DynboundError):
    """Forcing sample has nonzero mean and projection was not requested."""


class SolverDiverged(DynboundError):
    """Linear solve for the duality mapping failed to converge."""


class IterationDiverged(DynboundError):
    """Eigenvalue iteration did not reach its tolerance."""


class NewtonStalled(DynboundError):
    """Newton iteration for an implicit step did not reach the tolerance.

    Args:
        message: Error description.
        residual: Weighted residual norm of the best iterate.
        best_iterate: Nodal vector with the smallest residual seen.
        step_index: Index of the failing time step, when known.
    """

    def __init__(
        self,
        message: str,
        residual: float,
        best_iterate: np.ndarray,
        step_index: int | None = None,
    ) -> None:
        super().__init__(message, {"residual": residual, "step_index": step_index})
        self.residual = residual
        self.best_iterate = best_iterate
        self.step_index = step_index


class GraphNotValidated(DynboundError):
    """Bound constants were requested for a graph that fails far-field validation."""


class MismatchedRuns(DynboundError):
    """Two trajectories compared by a study do not share grid, forcing or steps."""


class ConfigParseError(DynboundError):
    """Run configuration text could not be tokenized.

    Args:
        message: Error description.
        line: 1-based line number of the offending statement.
        key: Offending key, when one could be read.
    """

    def __init__(self, message: str, line: int | None = None, key: str | None = None) -> None:
        super().__init__(message, {"line": line, "key": key})
        self.line = line
        self.key = key


class ValidationError(DynboundError):
    """Configuration or study preconditions are violated.

    All violations found are collected in ``violations``.
    """

    def __init__(self, message: str, violations: list[str] | None = None) -> None:
        super().__init__(message, {"violations": violations or [message]})
        self.violations = violations or [message]
