"""Dataset records, context-map loading and derived training targets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from ..core.config_models import ContextModality
from ..core.constants import FRAME_SIZE, NUM_KEYPOINTS, NUM_RAW_LABELS, SemanticCategory
from ..core.error_handling import FormatError, InputError, NotFoundError
from ..core.logging import get_logger
from ..templates.bank import TemplateBank, assign_label
from ..templates.pose import Pose, normalize_pose
from ..transform import TransformParams, invert_transform
from .io import read_json, read_png
from .labels import quantize_labels, requantize, validate_palette
from .manifest import ManifestRecord, PoseKind, read_manifest

if TYPE_CHECKING:
    from pathlib import Path

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.jsonl"


@dataclass(frozen=True)
class PoseTargets:
    """Template class and transform parameters that rebuild one pose."""

    class_index: int
    params: TransformParams


@dataclass
class SceneRecord:
    """One scene with its file locations and ground-truth poses in scene pixels."""

    root: Path
    entry: ManifestRecord
    poses: list[Pose]
    targets: list[PoseTargets] = field(default_factory=list)

    @property
    def id(self) -> str:
        """Record identifier."""
        return self.entry.id

    @property
    def scene_size(self) -> tuple[int, int]:
        """``(h, w)``."""
        return self.entry.height, self.entry.width

    @property
    def kinds(self) -> list[PoseKind]:
        """Posture labels, ``unknown`` where the manifest has none."""
        kinds = list(self.entry.pose_kinds)
        return kinds + [PoseKind.UNKNOWN] * (len(self.poses) - len(kinds))

    def path(self, relative: str) -> Path:
        """Absolute location of a manifest path."""
        return self.root / relative

    def load_image(self) -> np.ndarray:
        """Scene image, ``h×w×3`` uint8."""
        return read_png(self.path(self.entry.scene))

    def load_mask(self) -> np.ndarray | None:
        """Feasible-centre mask if the record has one."""
        return None if self.entry.mask is None else read_png(self.path(self.entry.mask), gray=True)

    def load_context(
        self,
        modality: ContextModality = ContextModality.SEMANTIC,
        label_mode: int = 8,
        mapping: dict[int, SemanticCategory] | None = None,
    ) -> np.ndarray:
        """Context map for ``modality`` at label granularity ``label_mode``.

        Raises
        ------
        NotFoundError
            If the map needed for the request is not part of the record.
        FormatError
            If the semantic map breaks the palette.

        """
        if modality is ContextModality.DEPTH:
            if self.entry.depth is None:
                raise NotFoundError(f"record {self.id} has no depth map", record=self.id)
            return read_png(self.path(self.entry.depth), gray=True)
        if label_mode == NUM_RAW_LABELS or (mapping is not None and self.entry.raw is not None):
            if self.entry.raw is None:
                raise NotFoundError(f"record {self.id} has no raw label map for mode {label_mode}", record=self.id)
            return quantize_labels(read_png(self.path(self.entry.raw), gray=True), label_mode, mapping)
        semantic = read_png(self.path(self.entry.semantic), gray=True)
        validate_palette(semantic, 8, source=str(self.path(self.entry.semantic)))
        return semantic if label_mode == 8 else requantize(semantic, label_mode)


def to_frame(pose: Pose, scene_size: tuple[int, int]) -> Pose:
    """Scene pixels to the 256-frame."""
    height, width = scene_size
    return pose.scaled(FRAME_SIZE / width, FRAME_SIZE / height)


def derive_targets(
    pose: Pose,
    bank: TemplateBank,
    scene_size: tuple[int, int],
    *,
    fixed_class: int | None = None,
) -> PoseTargets:
    """Nearest template (or ``fixed_class``) and the parameters that rebuild ``pose``."""
    if fixed_class is None:
        class_index, _ = assign_label(normalize_pose(to_frame(pose, scene_size)), bank)
    else:
        class_index = fixed_class
    return PoseTargets(class_index, invert_transform(pose, bank.template(class_index), scene_size))


def _load_poses(path: Path) -> list[Pose]:
    payload = read_json(path)
    if not isinstance(payload, list):
        raise FormatError(f"{path} must hold a list of poses", path=str(path))
    poses = []
    for person, triples in enumerate(payload):
        try:
            arr = np.asarray(triples, dtype=np.float64)
        except (ValueError, TypeError) as e:
            raise FormatError(f"{path}: pose {person} is not numeric: {e}", path=str(path)) from e
        if arr.shape != (NUM_KEYPOINTS, 3):
            raise FormatError(
                f"{path}: pose {person} has shape {arr.shape}, expected {NUM_KEYPOINTS} [x, y, visible] triples",
                path=str(path),
            )
        poses.append(Pose.from_triples(arr.tolist()))
    return poses


def load_dataset(
    root: Path,
    *,
    bank: TemplateBank | None = None,
    fixed_class: int | None = None,
    split: str | None = None,
) -> list[SceneRecord]:
    """Read and validate every manifest record under ``root``.

    Parameters
    ----------
    root : Path
        Dataset directory holding ``manifest.jsonl``.
    bank : TemplateBank | None, optional
        When given, each pose gets its derived training targets.
    fixed_class : int | None, optional
        Template class forced for every pose instead of the nearest one.
    split : str | None, optional
        Keep only ``"train"`` or ``"test"`` records.

    Raises
    ------
    NotFoundError
        If the manifest or a referenced file is missing.
    FormatError
        If a pose file is malformed or a semantic map breaks the palette.

    """
    entries = read_manifest(root / MANIFEST_NAME)
    if split is not None:
        if split not in {"train", "test"}:
            raise InputError(f"split must be 'train' or 'test', got '{split}'")
        entries = [e for e in entries if e.split == split]
    records = []
    for entry in entries:
        for relative in (entry.scene, entry.semantic, entry.poses, entry.raw, entry.depth, entry.mask):
            if relative is not None and not (root / relative).is_file():
                raise NotFoundError(f"record {entry.id} references missing file {root / relative}", path=str(root / relative))
        semantic_path = root / entry.semantic
        validate_palette(read_png(semantic_path, gray=True), 8, source=str(semantic_path))
        record = SceneRecord(root, entry, _load_poses(root / entry.poses))
        if bank is not None:
            record.targets = [
                derive_targets(p, bank, record.scene_size, fixed_class=fixed_class) for p in record.poses
            ]
        records.append(record)
    logger.info("Loaded dataset", path=str(root), records=len(records), poses=sum(len(r.poses) for r in records))
    return records


def all_poses(records: list[SceneRecord]) -> list[Pose]:
    """Every ground-truth pose, in 256-frame coordinates."""
    return [to_frame(p, r.scene_size) for r in records for p in r.poses]
