"""Template classifier and its cross-entropy loss."""

from __future__ import annotations

import numpy as np

from ..autodiff import Linear, Module, Tensor, ops
from ..core.error_handling import ContractError

PROB_FLOOR = 1e-12


class TemplateClassifier(Module):
    """One FC layer over the combined context vector, then softmax."""

    def __init__(
        self,
        context_dim: int,
        num_classes: int,
        rng: np.random.Generator,
        *,
        zero_init: bool = False,
    ) -> None:
        """Create the projection to ``num_classes`` logits."""
        self.num_classes = num_classes
        self.logits = Linear(context_dim, num_classes, rng, zero_init=zero_init)

    def forward(self, ctx: Tensor) -> Tensor:
        """Class probabilities, ``(B×)m``."""
        return ops.softmax(self.logits(ctx), axis=-1)


def predict_class(probs: np.ndarray) -> np.ndarray:
    """Arg-max class per row; ties go to the lowest index."""
    return np.argmax(np.asarray(probs), axis=-1)


def cce_loss(probs: Tensor, target_onehot: np.ndarray) -> Tensor:
    """``-log p[target]`` with ``p`` clamped at 1e-12, averaged over the batch.

    Raises
    ------
    ContractError
        If a target row is not one-hot or shapes differ.

    """
    target = np.asarray(target_onehot, dtype=np.float64)
    if target.shape != probs.shape:
        raise ContractError(f"target shape {target.shape} does not match predictions {probs.shape}")
    valid = np.isin(target, (0.0, 1.0)).all(axis=-1) & (target.sum(axis=-1) == 1.0)
    if not np.all(valid):
        raise ContractError("classification targets must be one-hot")
    log_probs = ops.log(ops.clamp(probs, PROB_FLOOR, None))
    picked = ops.sum(ops.mul(log_probs, Tensor(target)), axis=-1)
    return ops.neg(ops.mean(picked))
