"""Shared-condition builders feeding the CVAE encoders and decoders."""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..autodiff import Linear, Module, Tensor, ops
from ..core.error_handling import ContractError

if TYPE_CHECKING:
    import numpy as np

    from ..core.config_models import HeadSettings


class GlobalCondition(Module):
    """``FC(ctx → shared) + ReLU`` on the global context vector."""

    def __init__(
        self,
        context_dim: int,
        config: HeadSettings,
        rng: np.random.Generator,
        *,
        zero_init: bool = False,
    ) -> None:
        """Create the projection."""
        self.project = Linear(context_dim, config.shared_dim, rng, zero_init=zero_init)

    def forward(self, ctx: Tensor) -> Tensor:
        """Shared condition of width ``shared_dim``."""
        return ops.relu(self.project(ctx))


class ClassCondition(Module):
    """Template class embedded by two FC-ReLU layers, joined with the context vector."""

    def __init__(
        self,
        context_dim: int,
        num_classes: int,
        config: HeadSettings,
        rng: np.random.Generator,
        *,
        zero_init: bool = False,
    ) -> None:
        """Create the class embedding and the merge layer."""
        self.num_classes = num_classes
        self.embed1 = Linear(num_classes, config.shared_dim, rng)
        self.embed2 = Linear(config.shared_dim, config.shared_dim, rng)
        self.merge = Linear(config.shared_dim + context_dim, config.shared_dim, rng, zero_init=zero_init)

    def forward(self, ctx: Tensor, class_onehot: Tensor) -> Tensor:
        """Shared condition of width ``shared_dim``."""
        if class_onehot.shape[-1] != self.num_classes:
            raise ContractError(
                f"class vector has {class_onehot.shape[-1]} entries, expected {self.num_classes}",
                shape=class_onehot.shape,
            )
        y = ops.relu(self.embed2(ops.relu(self.embed1(class_onehot))))
        return ops.relu(self.merge(ops.concat([y, ctx], axis=-1)))


def build_shared_condition(
    builder: GlobalCondition | ClassCondition,
    ctx: Tensor,
    class_onehot: Tensor | None = None,
) -> Tensor:
    """Run ``builder`` on the context vector and, for class-conditioned heads, the class.

    Raises
    ------
    ContractError
        If a class vector is missing for a class-conditioned builder, or
        given to the location builder.

    """
    if isinstance(builder, ClassCondition):
        if class_onehot is None:
            raise ContractError("scale and deformation conditions need a template class")
        return builder(ctx, class_onehot)
    if class_onehot is not None:
        raise ContractError("the location condition takes no template class")
    return builder(ctx)
