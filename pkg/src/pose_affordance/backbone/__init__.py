"""Frozen feature extraction."""

from .extractor import Backbone, FrozenCNNBackbone, PrecomputedBackbone, build_backbone
from .feature_file import FeatureFile, FeatureMap, load_precomputed, write_feature_file
from .resize import resize_bilinear, resize_to_input, to_three_channels

__all__ = [
    "Backbone",
    "FeatureFile",
    "FeatureMap",
    "FrozenCNNBackbone",
    "PrecomputedBackbone",
    "build_backbone",
    "load_precomputed",
    "resize_bilinear",
    "resize_to_input",
    "to_three_channels",
    "write_feature_file",
]
