"""Minimal tensor engine with reverse-mode differentiation."""

from . import ops
from .checkpoint import load_checkpoint, read_entries, save_checkpoint, write_entries
from .gradcheck import check_gradients, numerical_gradient
from .nn import BatchNorm, BatchNormState, Conv2d, Linear, Module
from .optim import Adam, AdamState, adam_step
from .tensor import (
    Tape,
    Tensor,
    backward,
    debug_checks,
    get_default_dtype,
    precision,
)

__all__ = [
    "Adam",
    "AdamState",
    "BatchNorm",
    "BatchNormState",
    "Conv2d",
    "Linear",
    "Module",
    "Tape",
    "Tensor",
    "adam_step",
    "backward",
    "check_gradients",
    "debug_checks",
    "get_default_dtype",
    "load_checkpoint",
    "numerical_gradient",
    "ops",
    "precision",
    "read_entries",
    "save_checkpoint",
    "write_entries",
]
