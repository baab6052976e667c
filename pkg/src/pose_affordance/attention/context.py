"""Context-vector construction from attended feature maps."""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..autodiff import BatchNorm, Conv2d, Module, Tensor, ops
from ..core.error_handling import DimensionError

if TYPE_CHECKING:
    import numpy as np

    from ..core.config_models import AttentionSettings


class ContextEncoder(Module):
    """Strided 4×4 conv, batch norm, ReLU, adaptive pooling and flattening.

    ``views`` is 1 for the global context and 3 when the global map is
    stacked with the two patch maps along channels.
    """

    def __init__(
        self,
        config: AttentionSettings,
        rng: np.random.Generator,
        *,
        views: int = 1,
        momentum: float = 0.1,
        eps: float = 1e-5,
    ) -> None:
        """Create the downsampling conv and batch norm."""
        self.channels = config.feature_channels
        self.in_channels = views * self.channels
        self.pool_size = config.pool_size
        self.downsample = Conv2d(self.in_channels, self.channels, 4, rng, stride=2, padding=1)
        self.norm = BatchNorm(self.channels, momentum=momentum, eps=eps)

    @property
    def output_dim(self) -> int:
        """Length of the context vector, ``C·P²``."""
        return self.channels * self.pool_size * self.pool_size

    def forward(self, stacked: Tensor) -> Tensor:
        """Map ``(B×)8×8×Cin`` to ``(B×)C·P²``.

        Raises
        ------
        DimensionError
            If the channel count is not the configured ``Cin``.

        """
        if stacked.shape[-1] != self.in_channels:
            raise DimensionError(
                f"context encoder expects {self.in_channels} channels, got {stacked.shape[-1]}",
                shape=stacked.shape,
            )
        squeeze = stacked.ndim == 3
        x = ops.reshape(stacked, (1, *stacked.shape)) if squeeze else stacked
        x = ops.relu(self.norm(self.downsample(x)))
        pooled = ops.adaptive_avg_pool2d(x, self.pool_size)
        flat = ops.reshape(pooled, (pooled.shape[0], self.output_dim))
        return ops.reshape(flat, (self.output_dim,)) if squeeze else flat
