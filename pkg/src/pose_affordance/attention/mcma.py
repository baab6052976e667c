"""Mutual cross-modal attention between image and context feature maps."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from ..autodiff import Module, Tensor, ops
from ..autodiff.nn import he_normal, parameter
from ..core.config_models import AttentionMode
from ..core.error_handling import ConfigurationError, DimensionError

if TYPE_CHECKING:
    from ..core.config_models import AttentionSettings

RMS_EPS = 1e-12

# Modes that read the context map.
_NEEDS_CONTEXT = frozenset(
    {
        AttentionMode.SELF_CONTEXT,
        AttentionMode.CROSS_CONTEXT_QUERIES,
        AttentionMode.CROSS_IMAGE_QUERIES,
        AttentionMode.MUTUAL,
    }
)


def rmsnorm(x: Tensor, gamma: Tensor, eps: float = RMS_EPS) -> Tensor:
    """Channel-wise RMS normalization: ``γ ⊙ x·√C / max(‖x‖₂, ε)`` per position."""
    channels = x.shape[-1]
    if gamma.shape != (channels,):
        raise DimensionError(f"rmsnorm gain {gamma.shape} does not match {channels} channels")
    scaled = ops.div(ops.mul(x, math.sqrt(channels)), ops.vector_norm(x, eps))
    return ops.mul(scaled, gamma)


def _as_batch(x: Tensor) -> tuple[Tensor, bool]:
    if x.ndim == 3:
        return ops.reshape(x, (1, *x.shape)), True
    if x.ndim != 4:
        raise DimensionError(f"feature maps must be H×W×C or B×H×W×C, got {x.shape}")
    return x, False


def project(x: Tensor, weight: Tensor) -> Tensor:
    """Zero-bias 1×1 convolution as a matmul over positions of a ``B×H×W×C`` map."""
    batch, height, width, channels = x.shape
    tokens = ops.reshape(x, (batch * height * width, channels))
    out = ops.matmul(tokens, weight)
    return ops.reshape(out, (batch, height, width, weight.shape[1]))


class ModalityParams(Module):
    """RMSNorm gain and the q, k, v, p projections of one modality."""

    def __init__(self, channels: int, embed_dim: int, rng: np.random.Generator) -> None:
        """Unit gain and He-normal projections."""
        self.gamma = parameter(np.ones(channels))
        self.q = parameter(he_normal(rng, (channels, embed_dim), channels))
        self.k = parameter(he_normal(rng, (channels, embed_dim), channels))
        self.v = parameter(he_normal(rng, (channels, embed_dim), channels))
        self.p = parameter(he_normal(rng, (embed_dim, channels), embed_dim))


class MCMABlock(Module):
    """Attention block with switchable ablation modes.

    Multi-head layout: channel index ``head * head_dim + dim``; spatial
    tokens in row-major order.
    """

    def __init__(self, config: AttentionSettings, rng: np.random.Generator) -> None:
        """Create per-modality parameters and the fusion projection."""
        self.mode = config.mode
        self.heads = config.heads
        self.head_dim = config.head_dim
        self.channels = config.feature_channels
        embed = config.embed_dim
        self.image = ModalityParams(self.channels, embed, rng)
        self.context = ModalityParams(self.channels, embed, rng)
        self.fuse = parameter(he_normal(rng, (2 * self.channels, self.channels), 2 * self.channels))

    def _split_heads(self, x: Tensor) -> Tensor:
        batch, tokens, _ = x.shape
        heads = ops.reshape(x, (batch, tokens, self.heads, self.head_dim))
        return ops.transpose(heads, (0, 2, 1, 3))

    def attention_weights(
        self,
        fq: Tensor,
        fkv: Tensor,
        query_params: ModalityParams,
        kv_params: ModalityParams,
    ) -> Tensor:
        """Per-head attention matrix ``B×heads×T×T`` for normalized inputs."""
        fq, _ = _as_batch(fq)
        fkv, _ = _as_batch(fkv)
        batch, height, width, _ = fq.shape
        tokens = height * width
        q = self._split_heads(ops.reshape(project(fq, query_params.q), (batch, tokens, -1)))
        k = self._split_heads(ops.reshape(project(fkv, kv_params.k), (batch, -1, self.heads * self.head_dim)))
        logits = ops.matmul(q, ops.transpose(k, (0, 1, 3, 2)))
        return ops.softmax(ops.mul(logits, 1.0 / math.sqrt(self.head_dim)), axis=-1)

    def cross_attend(
        self,
        fq: Tensor,
        fkv: Tensor,
        query_params: ModalityParams,
        kv_params: ModalityParams,
    ) -> Tensor:
        """Queries from ``fq``, keys and values from ``fkv``, then the output projection.

        Inputs must already be RMS-normalized. Self-attention is ``fq is fkv``.
        The output projection ``p`` belongs to the query modality.

        Raises
        ------
        DimensionError
            If the maps have different shapes or channel counts.

        """
        if fq.shape != fkv.shape:
            raise DimensionError(f"cross attention needs equal map shapes, got {fq.shape} and {fkv.shape}")
        fq_b, squeeze = _as_batch(fq)
        fkv_b, _ = _as_batch(fkv)
        if fq_b.shape[-1] != self.channels:
            raise DimensionError(f"expected {self.channels} channels, got {fq_b.shape[-1]}")
        batch, height, width, _ = fq_b.shape
        tokens = height * width
        embed = self.heads * self.head_dim

        weights = self.attention_weights(fq_b, fkv_b, query_params, kv_params)
        v = self._split_heads(ops.reshape(project(fkv_b, kv_params.v), (batch, tokens, embed)))
        attended = ops.matmul(weights, v)
        merged = ops.reshape(ops.transpose(attended, (0, 2, 1, 3)), (batch, height, width, embed))
        out = project(merged, query_params.p)
        return ops.reshape(out, out.shape[1:]) if squeeze else out

    def forward(self, image: Tensor, context: Tensor | None = None) -> Tensor:
        """Apply the configured mode to a pair of ``(B×)H×W×C`` maps.

        Raises
        ------
        ConfigurationError
            If the mode needs a context map and none was given.

        """
        mode = self.mode
        if mode is AttentionMode.NONE:
            return image
        if mode in _NEEDS_CONTEXT and context is None:
            raise ConfigurationError(f"attention mode '{mode.value}' needs a context map")

        norm_image = rmsnorm(image, self.image.gamma)
        if mode is AttentionMode.SELF_IMAGE:
            return self.cross_attend(norm_image, norm_image, self.image, self.image)

        assert context is not None
        norm_context = rmsnorm(context, self.context.gamma)
        if mode is AttentionMode.SELF_CONTEXT:
            return self.cross_attend(norm_context, norm_context, self.context, self.context)
        if mode is AttentionMode.CROSS_CONTEXT_QUERIES:
            return self.cross_attend(norm_context, norm_image, self.context, self.image)
        if mode is AttentionMode.CROSS_IMAGE_QUERIES:
            return self.cross_attend(norm_image, norm_context, self.image, self.context)

        attended_image = self.cross_attend(norm_image, norm_context, self.image, self.context)
        attended_context = self.cross_attend(norm_context, norm_image, self.context, self.image)
        stacked = ops.concat([attended_image, attended_context], axis=-1)
        squeeze = stacked.ndim == 3
        stacked_b, _ = _as_batch(stacked)
        fused = project(stacked_b, self.fuse)
        return ops.reshape(fused, fused.shape[1:]) if squeeze else fused
