"""Core constants for the pose affordance pipeline."""

from .metrics_constants import LossComponents, MetricLabels, MetricNames
from .pose_constants import (
    CATEGORY_PALETTE,
    DEFAULT_CATEGORY_IDS,
    FEATURE_CHANNELS,
    FEATURE_SIDE,
    FIXED_CATEGORIES,
    FRAME_SIZE,
    KEYPOINT_NAMES,
    LIMBS,
    MOVABLE_CATEGORIES,
    NUM_KEYPOINTS,
    NUM_RAW_LABELS,
    SYNTH_RAW_IDS,
    Keypoint,
    Modality,
    SemanticCategory,
    default_label_mapping,
)

__all__ = [
    "CATEGORY_PALETTE",
    "DEFAULT_CATEGORY_IDS",
    "FEATURE_CHANNELS",
    "FEATURE_SIDE",
    "FIXED_CATEGORIES",
    "FRAME_SIZE",
    "KEYPOINT_NAMES",
    "LIMBS",
    "MOVABLE_CATEGORIES",
    "NUM_KEYPOINTS",
    "NUM_RAW_LABELS",
    "SYNTH_RAW_IDS",
    "Keypoint",
    "LossComponents",
    "MetricLabels",
    "MetricNames",
    "Modality",
    "SemanticCategory",
    "default_label_mapping",
]
