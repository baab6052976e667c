"""Disentangled human-affordance pose generation from scene context."""

from .core.config import get_version

__version__ = get_version()

__all__ = ["__version__"]
