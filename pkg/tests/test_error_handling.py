"""Tests for error handling utilities."""

from __future__ import annotations

from unittest.mock import Mock, patch

import numpy as np
import pytest

from pose_affordance.core.error_handling import (
    AffordanceError,
    ConfigurationError,
    DegeneratePoseError,
    DimensionError,
    ErrorCategory,
    MetricUndefinedError,
    NonFiniteError,
    NotFoundError,
    TrainingDivergenceError,
    validate_shape,
    with_error_handling,
)


class TestErrorCategories:
    """Test error category enum values."""

    def test_error_category_values(self) -> None:
        """Test that error category enum has expected values."""
        assert ErrorCategory.DIMENSION == "dimension"
        assert ErrorCategory.NOT_FOUND == "not_found"
        assert ErrorCategory.CONFIGURATION == "configuration"
        assert ErrorCategory.DIVERGENCE == "divergence"
        assert ErrorCategory.DEGENERATE_POSE == "degenerate_pose"
        assert ErrorCategory.METRIC_UNDEFINED == "metric_undefined"
        assert ErrorCategory.NUMERIC == "numeric"


class TestAffordanceErrors:
    """Test custom exception classes."""

    def test_base_error_initialization(self) -> None:
        """Test AffordanceError initialization."""
        error = AffordanceError("Test error", ErrorCategory.INPUT, stage="train", head="scale")
        assert str(error) == "Test error"
        assert error.category == ErrorCategory.INPUT
        assert error.stage == "train"
        assert error.context == {"head": "scale"}

    def test_code_and_one_line(self) -> None:
        """Test the machine-parsable rendering."""
        error = NotFoundError("scene 'x' is not\n in the dataset")
        assert error.code == "E_NOT_FOUND"
        assert error.one_line() == "E_NOT_FOUND: scene 'x' is not in the dataset"

    def test_subclass_categories(self) -> None:
        """Test that each subclass carries its category."""
        assert DimensionError("bad").category == ErrorCategory.DIMENSION
        assert ConfigurationError("bad").code == "E_CONFIGURATION"
        assert DegeneratePoseError().category == ErrorCategory.DEGENERATE_POSE

    def test_training_divergence_error(self) -> None:
        """Test TrainingDivergenceError."""
        error = TrainingDivergenceError("scale", 17, epoch=3)
        assert "head 'scale' diverged at step 17" in str(error)
        assert error.step == 17
        assert error.stage == "scale"
        assert error.context == {"step": 17, "epoch": 3}

    def test_metric_undefined_error(self) -> None:
        """Test MetricUndefinedError."""
        error = MetricUndefinedError("iou", "bounding box has zero area")
        assert str(error) == "iou undefined: bounding box has zero area"
        assert error.metric == "iou"

    def test_non_finite_error(self) -> None:
        """Test NonFiniteError."""
        error = NonFiniteError("log", shape=(2,))
        assert error.code == "E_NUMERIC"
        assert error.context == {"operation": "log", "shape": (2,)}


class TestWithErrorHandlingDecorator:
    """Test the with_error_handling decorator."""

    def test_successful_operation(self) -> None:
        """Test decorator with successful operation."""

        @with_error_handling("Test operation")
        def successful_operation() -> str:
            return "success"

        assert successful_operation() == "success"

    def test_error_handling_continue_on_error(self) -> None:
        """Test decorator continues on error when configured."""

        @with_error_handling("Test operation", continue_on_error=True)
        def failing_operation() -> str:
            raise ValueError("Test error")

        assert failing_operation() is None

    def test_default_return(self) -> None:
        """Test the configured fallback value."""

        @with_error_handling("Test operation", continue_on_error=True, default_return=[])
        def failing_operation() -> list[int]:
            raise ConfigurationError("bad")

        assert failing_operation() == []

    def test_error_handling_reraise(self) -> None:
        """Test decorator wraps unexpected exceptions when not continuing."""

        @with_error_handling("Test operation")
        def failing_operation() -> str:
            raise ValueError("Test error")

        with pytest.raises(AffordanceError) as exc_info:
            failing_operation()

        assert "Error during Test operation: Test error" in str(exc_info.value)
        assert exc_info.value.category == ErrorCategory.INPUT

    def test_pipeline_errors_pass_through(self) -> None:
        """Test that pipeline errors are re-raised unchanged."""
        original = NotFoundError("missing")

        @with_error_handling("Test operation")
        def failing_operation() -> str:
            raise original

        with pytest.raises(NotFoundError) as exc_info:
            failing_operation()
        assert exc_info.value is original

    @pytest.mark.parametrize(
        ("exception", "category"),
        [
            (FileNotFoundError("x"), ErrorCategory.NOT_FOUND),
            (FloatingPointError("x"), ErrorCategory.NUMERIC),
            (RuntimeError("x"), ErrorCategory.INTERNAL),
        ],
    )
    def test_inferred_categories(self, exception: Exception, category: ErrorCategory) -> None:
        """Test category inference for unexpected exceptions."""

        @with_error_handling("Test operation")
        def failing_operation() -> None:
            raise exception

        with pytest.raises(AffordanceError) as exc_info:
            failing_operation()
        assert exc_info.value.category == category

    def test_categorized_error_handling(self) -> None:
        """Test error handling with specific category."""

        @with_error_handling("Load", error_category=ErrorCategory.FORMAT)
        def load() -> None:
            raise KeyError("samples")

        with pytest.raises(AffordanceError) as exc_info:
            load()
        assert exc_info.value.category == ErrorCategory.FORMAT

    def test_wraps_preserves_name(self) -> None:
        """Test that the wrapped function keeps its name for pickling."""

        @with_error_handling("Test")
        def named_function() -> None:
            return None

        assert named_function.__name__ == "named_function"

    @patch("pose_affordance.core.error_handling.logger")
    def test_logging_behavior(self, mock_logger: Mock) -> None:
        """Test that skipped pipeline errors are logged as warnings with their code."""

        @with_error_handling("Test operation", continue_on_error=True)
        def operation_with_error() -> None:
            raise DimensionError("shape mismatch")

        operation_with_error()

        mock_logger.warning.assert_called_once()
        call_args = mock_logger.warning.call_args
        assert "Error during Test operation" in call_args[0][0]
        assert call_args[1]["error_code"] == "E_DIMENSION"


class TestValidateShape:
    """Test array shape validation."""

    def test_matching_shape_with_wildcard(self) -> None:
        """Test that None matches any size."""
        arr = np.zeros((3, 16, 2))
        assert validate_shape(arr, (None, 16, 2), "poses") is arr

    def test_wrong_rank(self) -> None:
        """Test a rank mismatch."""
        with pytest.raises(DimensionError, match=r"poses expected shape \('\*', 16, 2\)"):
            validate_shape(np.zeros((16, 2)), (None, 16, 2), "poses")

    def test_wrong_size(self) -> None:
        """Test a fixed dimension mismatch."""
        with pytest.raises(DimensionError) as exc_info:
            validate_shape(np.zeros((4, 15, 2)), (None, 16, 2), "poses")
        assert exc_info.value.context["actual_shape"] == (4, 15, 2)
