"""Structured logging for the pipeline.

Log lines go to stderr so that commands can print tables and JSON on stdout.
NumPy values in event fields are rendered as plain numbers or as a
shape/dtype summary, never as full arrays.
"""

from __future__ import annotations

import logging
import sys
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog
from structlog.types import Processor

if TYPE_CHECKING:
    from structlog.types import EventDict, WrappedLogger

QUIET_LIBRARIES = ("PIL", "opentelemetry", "anyio")


def summarize_arrays(_: WrappedLogger, __: str, event_dict: EventDict) -> EventDict:
    """Replace NumPy scalars by Python numbers and arrays by ``array(shape, dtype)``."""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray):
            event_dict[key] = f"array({'x'.join(map(str, value.shape))}, {value.dtype})"
    return event_dict


def setup_logging(level: str = "INFO", *, json_output: bool = False) -> None:
    """Configure structlog on top of the standard library root logger.

    Parameters
    ----------
    level : str, optional
        Logging level, by default "INFO".
    json_output : bool, optional
        Render JSON even when stderr is a terminal, by default False.

    """
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level.upper()),
        force=True,
    )
    for name in QUIET_LIBRARIES:
        logging.getLogger(name).setLevel(logging.WARNING)

    processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        summarize_arrays,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]
    if sys.stderr.isatty() and not json_output:
        processors.append(structlog.dev.ConsoleRenderer(colors=True))
    else:
        processors.append(structlog.processors.JSONRenderer())

    structlog.configure(
        processors=processors,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def get_logger(name: str | None = None) -> Any:
    """Structured logger, usually for ``__name__``."""
    return structlog.get_logger(name)


class LogContext:
    """Bind fields to a logger for the duration of a block.

    The bound logger is available as ``ctx.logger`` inside the block.
    """

    def __init__(self, logger: Any, **fields: Any) -> None:
        """Remember the logger and the fields to bind."""
        self._base = logger
        self.logger = logger
        self.fields = fields

    def __enter__(self) -> LogContext:
        """Bind the fields."""
        self.logger = self._base.bind(**self.fields)
        return self

    def __exit__(self, *args: Any) -> None:
        """Restore the unbound logger."""
        self.logger = self._base


def add_global_context(**fields: Any) -> None:
    """Add fields to every log line of this process, e.g. the CLI command."""
    structlog.contextvars.bind_contextvars(**fields)


def clear_global_context() -> None:
    """Drop all process-wide log fields."""
    structlog.contextvars.clear_contextvars()
