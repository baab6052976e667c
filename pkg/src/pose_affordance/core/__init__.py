"""Core modules for the pose affordance pipeline."""

from .config import Settings, load_settings
from .error_handling import AffordanceError, ErrorCategory
from .logging import get_logger, setup_logging
from .telemetry import get_metrics_manager

__all__ = [
    "AffordanceError",
    "ErrorCategory",
    "Settings",
    "get_logger",
    "get_metrics_manager",
    "load_settings",
    "setup_logging",
]
