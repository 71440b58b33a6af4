"""Tests for custom exceptions."""

import numpy as np
import pytest

from dynbound.exceptions import (
    ConfigParseError,
    DynboundError,
    ForcingNotMeanZero,
    GraphNotValidated,
    GridTooSmall,
    InvalidParams,
    IterationDiverged,
    MismatchedRuns,
    NegativeIntercept,
    NewtonStalled,
    NotAffineFarField,
    NotMeanZero,
    ShapeMismatch,
    SolverDiverged,
    ValidationError,
    WrongGeometry,
)


class TestDynboundError:
    """Tests for the base DynboundError class."""

    def test_basic_error(self):
        """Test basic error creation."""
        error = DynboundError("Something went wrong")
        assert str(error) == "Something went wrong"
        assert error.message == "Something went wrong"
        assert error.details is None

    def test_error_with_details(self):
        """Test error with structured details."""
        error = DynboundError("Bad field", details={"index": 3})
        assert error.details == {"index": 3}


class TestSpecificExceptions:
    """Tests for specific exception types."""

    @pytest.mark.parametrize(
        "cls",
        [
            InvalidParams,
            NotAffineFarField,
            NegativeIntercept,
            GridTooSmall,
            ShapeMismatch,
            WrongGeometry,
            NotMeanZero,
            ForcingNotMeanZero,
            SolverDiverged,
            IterationDiverged,
            GraphNotValidated,
            MismatchedRuns,
        ],
    )
    def test_inherits_base(self, cls):
        """Test every error kind can be caught as DynboundError."""
        error = cls("failure")
        assert isinstance(error, DynboundError)
        assert error.message == "failure"

    def test_newton_stalled(self):
        """Test NewtonStalled carries the best iterate."""
        best = np.array([1.0, 2.0])
        error = NewtonStalled("stalled", residual=1e-3, best_iterate=best, step_index=4)
        assert isinstance(error, DynboundError)
        assert error.residual == 1e-3
        assert error.best_iterate is best
        assert error.step_index == 4
        assert error.details == {"residual": 1e-3, "step_index": 4}

    def test_config_parse_error(self):
        """Test ConfigParseError keeps line and key."""
        error = ConfigParseError("bad line", line=7, key="run.tau")
        assert error.line == 7
        assert error.key == "run.tau"
        assert error.details == {"line": 7, "key": "run.tau"}

    def test_validation_error_single(self):
        """Test a single violation defaults to the message."""
        error = ValidationError("tau must be positive")
        assert error.violations == ["tau must be positive"]

    def test_validation_error_many(self):
        """Test collected violations."""
        error = ValidationError("2 problems", violations=["a", "b"])
        assert error.violations == ["a", "b"]
        assert error.details == {"violations": ["a", "b"]}
