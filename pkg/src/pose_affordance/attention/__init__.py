"""Cross-modal attention and context vectors."""

from .context import ContextEncoder
from .mcma import MCMABlock, ModalityParams, project, rmsnorm

__all__ = ["ContextEncoder", "MCMABlock", "ModalityParams", "project", "rmsnorm"]
