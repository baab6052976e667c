"""Frozen feature extractors."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

import numpy as np

from ..autodiff import Tensor, ops
from ..autodiff.nn import he_normal
from ..core.config_models import BackboneKind
from ..core.constants import FEATURE_CHANNELS, FEATURE_SIDE, FRAME_SIZE, Modality
from ..core.error_handling import ConfigurationError, DimensionError
from ..core.logging import get_logger
from .feature_file import FeatureFile, FeatureMap
from .resize import to_three_channels

if TYPE_CHECKING:
    from ..core.config import Settings

logger = get_logger(__name__)

STAGE_CHANNELS = (32, 64, 128, 256)


class Backbone(ABC):
    """Source of frozen ``8×8×C`` feature maps."""

    kind: BackboneKind

    def __init__(self, channels: int = FEATURE_CHANNELS) -> None:
        """Record the output channel count."""
        self.channels = channels

    @property
    def output_shape(self) -> tuple[int, int, int]:
        """Shape of every produced map."""
        return (FEATURE_SIDE, FEATURE_SIDE, self.channels)

    @abstractmethod
    def features(self, record_id: str, modality: Modality, image: np.ndarray | None) -> FeatureMap:
        """Return the feature map for one input."""


class FrozenCNNBackbone(Backbone):
    """Five stride-2 3×3 convolutions with seeded He-normal weights and ReLU.

    The weights are plain arrays, never tensors that require gradients, so
    no optimizer can reach them.
    """

    kind = BackboneKind.BUILTIN

    def __init__(self, seed: int, channels: int = FEATURE_CHANNELS) -> None:
        """Generate the kernels from ``seed``."""
        super().__init__(channels)
        self.seed = seed
        rng = np.random.default_rng(seed)
        widths = (3, *STAGE_CHANNELS, channels)
        self.kernels: list[np.ndarray] = [
            he_normal(rng, (3, 3, c_in, c_out), 9 * c_in)
            for c_in, c_out in zip(widths[:-1], widths[1:], strict=True)
        ]

    def extract(self, image: np.ndarray) -> np.ndarray:
        """Features of a ``256×256×3`` (or grayscale) image with values in 0..255.

        Raises
        ------
        DimensionError
            If the image is not 256×256.

        """
        arr = to_three_channels(np.asarray(image))
        if arr.shape != (FRAME_SIZE, FRAME_SIZE, 3):
            raise DimensionError(
                f"backbone input must be {FRAME_SIZE}×{FRAME_SIZE}×3, got {arr.shape}",
                shape=arr.shape,
            )
        x = Tensor(arr.astype(np.float64) / 255.0, dtype=np.float64)
        for kernel in self.kernels:
            x = ops.relu(ops.conv2d(x, Tensor(kernel, dtype=np.float64), stride=2, padding=1))
        return x.data.astype(np.float32)

    def features(self, record_id: str, modality: Modality, image: np.ndarray | None) -> FeatureMap:
        """Extract features from ``image``; ``record_id`` is ignored."""
        if image is None:
            raise DimensionError(f"builtin backbone needs the image for record '{record_id}'")
        return FeatureMap(self.extract(image), modality)


class PrecomputedBackbone(Backbone):
    """Serves maps stored in an AFFT1 feature file."""

    kind = BackboneKind.PRECOMPUTED

    def __init__(self, feature_file: FeatureFile) -> None:
        """Wrap an opened feature file."""
        super().__init__(feature_file.dims[2])
        self.feature_file = feature_file

    def features(self, record_id: str, modality: Modality, image: np.ndarray | None) -> FeatureMap:
        """Look the record up; ``image`` is ignored."""
        return self.feature_file.get(record_id, modality)


def build_backbone(settings: Settings) -> Backbone:
    """Create the backbone named by ``settings.backbone``.

    Raises
    ------
    ConfigurationError
        If the precomputed kind has no feature file.

    """
    channels = settings.attention.feature_channels
    if settings.backbone.kind is BackboneKind.PRECOMPUTED:
        if settings.backbone.feature_file is None:
            raise ConfigurationError("precomputed backbone requires backbone.feature_file")
        feature_file = FeatureFile(
            settings.backbone.feature_file, (FEATURE_SIDE, FEATURE_SIDE, channels)
        )
        logger.info("Using precomputed features", path=str(feature_file.path), records=len(feature_file))
        return PrecomputedBackbone(feature_file)
    return FrozenCNNBackbone(settings.backbone.seed, channels)
