"""Error handling utilities for the pose affordance pipeline."""

from __future__ import annotations

import functools
from enum import Enum
from typing import TYPE_CHECKING, Any, TypeVar, cast

from .logging import get_logger

if TYPE_CHECKING:
    from collections.abc import Callable

    import numpy as np

logger = get_logger(__name__)

T = TypeVar("T")


class ErrorCategory(str, Enum):
    """Error categories; the value doubles as the CLI error code suffix."""

    DIMENSION = "dimension"
    CONTRACT = "contract"
    INPUT = "input"
    FORMAT = "format"
    NOT_FOUND = "not_found"
    STATE = "state"
    CONFIGURATION = "configuration"
    DIVERGENCE = "divergence"
    DEGENERATE_POSE = "degenerate_pose"
    METRIC_UNDEFINED = "metric_undefined"
    NUMERIC = "numeric"
    INTERNAL = "internal"


class AffordanceError(Exception):
    """Base exception for pipeline errors."""

    def __init__(
        self,
        message: str,
        category: ErrorCategory,
        *,
        stage: str | None = None,
        **context: Any,
    ) -> None:
        """Initialize the error with context.

        Parameters
        ----------
        message : str
            Error message.
        category : ErrorCategory
            Error category.
        stage : str | None, optional
            Pipeline stage that raised, by default None.
        **context : Any
            Additional context for logging.

        """
        super().__init__(message)
        self.category = category
        self.stage = stage
        self.context = context

    @property
    def code(self) -> str:
        """Machine-parsable error code, e.g. ``E_NOT_FOUND``."""
        return f"E_{self.category.value.upper()}"

    def one_line(self) -> str:
        """Render as a single ``CODE: message`` line."""
        message = " ".join(str(self).split())
        return f"{self.code}: {message}"


class DimensionError(AffordanceError):
    """Raised when tensor shapes do not fit an operation."""

    def __init__(self, message: str, **context: Any) -> None:
        """Initialize dimension error."""
        super().__init__(message, ErrorCategory.DIMENSION, **context)


class ContractError(AffordanceError):
    """Raised when a caller violates an operation precondition."""

    def __init__(self, message: str, **context: Any) -> None:
        """Initialize contract error."""
        super().__init__(message, ErrorCategory.CONTRACT, **context)


class InputError(AffordanceError):
    """Raised for invalid user-supplied values."""

    def __init__(self, message: str, **context: Any) -> None:
        """Initialize input error."""
        super().__init__(message, ErrorCategory.INPUT, **context)


class FormatError(AffordanceError):
    """Raised when a file does not match its declared format."""

    def __init__(self, message: str, **context: Any) -> None:
        """Initialize format error."""
        super().__init__(message, ErrorCategory.FORMAT, **context)


class NotFoundError(AffordanceError):
    """Raised when a file or record is missing."""

    def __init__(self, message: str, **context: Any) -> None:
        """Initialize not-found error."""
        super().__init__(message, ErrorCategory.NOT_FOUND, **context)


class StateError(AffordanceError):
    """Raised when an object is used before it is ready."""

    def __init__(self, message: str, **context: Any) -> None:
        """Initialize state error."""
        super().__init__(message, ErrorCategory.STATE, **context)


class ConfigurationError(AffordanceError):
    """Raised for contradictory or incomplete configuration."""

    def __init__(self, message: str, **context: Any) -> None:
        """Initialize configuration error."""
        super().__init__(message, ErrorCategory.CONFIGURATION, **context)


class TrainingDivergenceError(AffordanceError):
    """Raised when a training loss becomes non-finite."""

    def __init__(self, head: str, step: int, **context: Any) -> None:
        """Initialize divergence error."""
        super().__init__(
            f"training of head '{head}' diverged at step {step}",
            ErrorCategory.DIVERGENCE,
            stage=head,
            step=step,
            **context,
        )
        self.step = step


class DegeneratePoseError(AffordanceError):
    """Raised when a pose has no extent."""

    def __init__(self, message: str = "pose keypoints are all coincident", **context: Any) -> None:
        """Initialize degenerate-pose error."""
        super().__init__(message, ErrorCategory.DEGENERATE_POSE, **context)


class MetricUndefinedError(AffordanceError):
    """Raised when a metric has a zero reference length or area."""

    def __init__(self, metric: str, reason: str, **context: Any) -> None:
        """Initialize metric-undefined error."""
        super().__init__(
            f"{metric} undefined: {reason}",
            ErrorCategory.METRIC_UNDEFINED,
            metric=metric,
            **context,
        )
        self.metric = metric


class NonFiniteError(AffordanceError):
    """Raised by debug checks when an operation produces NaN or Inf."""

    def __init__(self, operation: str, **context: Any) -> None:
        """Initialize non-finite error."""
        super().__init__(
            f"{operation} produced non-finite values",
            ErrorCategory.NUMERIC,
            operation=operation,
            **context,
        )


def with_error_handling(
    operation: str,
    *,
    continue_on_error: bool = False,
    error_category: ErrorCategory | None = None,
    default_return: Any = None,
) -> Callable[[Callable[..., T]], Callable[..., T | None]]:
    """Decorator for consistent error handling.

    Parameters
    ----------
    operation : str
        Description of the operation for logging.
    continue_on_error : bool, optional
        If True, return ``default_return`` on error instead of raising, by default False.
    error_category : ErrorCategory | None, optional
        Category for unexpected exceptions, by default None (inferred).
    default_return : Any, optional
        Value to return on error if continue_on_error is True, by default None.

    Returns
    -------
    Callable
        Decorated function.

    """

    def decorator(func: Callable[..., T]) -> Callable[..., T | None]:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> T | None:
            try:
                return func(*args, **kwargs)
            except AffordanceError as e:
                if not continue_on_error:
                    raise
                logger.warning(
                    f"Error during {operation}",
                    operation=operation,
                    error_code=e.code,
                    error_message=str(e),
                )
                return cast(T | None, default_return)
            except Exception as e:
                category = error_category
                if category is None:
                    if isinstance(e, FileNotFoundError):
                        category = ErrorCategory.NOT_FOUND
                    elif isinstance(e, ValueError):
                        category = ErrorCategory.INPUT
                    elif isinstance(e, FloatingPointError | OverflowError):
                        category = ErrorCategory.NUMERIC
                    else:
                        category = ErrorCategory.INTERNAL

                logger.error(
                    f"Error during {operation}",
                    operation=operation,
                    error_type=type(e).__name__,
                    error_message=str(e),
                    error_category=category.value,
                    continue_on_error=continue_on_error,
                    exc_info=True,
                )

                if continue_on_error:
                    return cast(T | None, default_return)
                raise AffordanceError(
                    f"Error during {operation}: {e}",
                    category,
                    original_error=str(e),
                    error_type=type(e).__name__,
                ) from e

        return wrapper

    return decorator


def validate_shape(
    array: np.ndarray,
    expected: tuple[int | None, ...],
    operation: str,
) -> np.ndarray:
    """Validate an array shape; ``None`` entries match any size.

    Parameters
    ----------
    array : np.ndarray
        The array to validate.
    expected : tuple[int | None, ...]
        Expected shape.
    operation : str
        Operation name for error messages.

    Returns
    -------
    np.ndarray
        The validated array.

    Raises
    ------
    DimensionError
        If the rank or any fixed dimension differs.

    """
    shape = tuple(array.shape)
    if len(shape) != len(expected) or any(
        want is not None and got != want for got, want in zip(shape, expected, strict=True)
    ):
        shown = tuple("*" if want is None else want for want in expected)
        raise DimensionError(
            f"{operation} expected shape {shown}, got {shape}",
            operation=operation,
            actual_shape=shape,
        )
    return array
