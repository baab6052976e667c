"""Dataset records, label quantization, patches and the synthetic generator."""

from .labels import (
    LabelMappingFile,
    load_label_mapping,
    palette_values,
    quantize_labels,
    requantize,
    validate_palette,
)
from .loader import PoseTargets, SceneRecord, all_poses, derive_targets, load_dataset, to_frame
from .manifest import ManifestRecord, PoseKind, read_manifest, write_manifest
from .patches import PatchKind, PatchSpec, crop_patch, extract_patch
from .synth import Furniture, FurnitureKind, SyntheticScene, feasible_mask, generate_scene, synth_generate

__all__ = [
    "Furniture",
    "FurnitureKind",
    "LabelMappingFile",
    "ManifestRecord",
    "PatchKind",
    "PatchSpec",
    "PoseKind",
    "PoseTargets",
    "SceneRecord",
    "SyntheticScene",
    "all_poses",
    "crop_patch",
    "derive_targets",
    "extract_patch",
    "feasible_mask",
    "generate_scene",
    "load_dataset",
    "load_label_mapping",
    "palette_values",
    "quantize_labels",
    "read_manifest",
    "requantize",
    "synth_generate",
    "to_frame",
    "validate_palette",
    "write_manifest",
]
