"""Procedural indoor scenes with annotated standing and sitting poses.

Each scene has a wall above a horizon, a floor below it, a background
ceiling strip and up to two pieces of furniture standing on the floor.
Standing people have their feet on the floor; sitting people are placed on
a chair or bed. Scenes contain no people: the poses are annotations only.

Depth maps store nearness: larger values are closer to the camera.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from ..core.constants import FRAME_SIZE, SYNTH_RAW_IDS, SemanticCategory
from ..core.error_handling import InputError
from ..core.logging import get_logger
from ..core.telemetry import scenes_generated_counter
from ..templates.pose import Pose
from ..transform import TransformParams, apply_transform
from .io import write_gray_png, write_json, write_rgb_png
from .labels import quantize_labels
from .manifest import ManifestRecord, PoseKind, write_manifest

if TYPE_CHECKING:
    from pathlib import Path

logger = get_logger(__name__)

CEILING_HEIGHT = 16
HORIZON_RANGE = (96, 128)
TEST_FRACTION = 0.2

STANDING_HEIGHT = (80.0, 120.0)
SITTING_HEIGHT = (55.0, 80.0)
POSE_JITTER = 0.03

# Normalized keypoints in MPII order.
STANDING_PROTOTYPE = np.array(
    [
        [0.40, 1.00], [0.42, 0.75], [0.43, 0.50], [0.57, 0.50], [0.58, 0.75], [0.60, 1.00],
        [0.50, 0.50], [0.50, 0.20], [0.50, 0.13], [0.50, 0.00],
        [0.20, 0.50], [0.25, 0.35], [0.35, 0.20], [0.65, 0.20], [0.75, 0.35], [0.80, 0.50],
    ]
)
SITTING_PROTOTYPE = np.array(
    [
        [0.30, 1.00], [0.28, 0.70], [0.42, 0.62], [0.58, 0.62], [0.72, 0.70], [0.70, 1.00],
        [0.50, 0.62], [0.50, 0.26], [0.50, 0.16], [0.50, 0.00],
        [0.36, 0.62], [0.22, 0.46], [0.32, 0.26], [0.68, 0.26], [0.78, 0.46], [0.64, 0.62],
    ]
)


class FurnitureKind(str, Enum):
    """Furniture categories the generator places."""

    TABLE = "table"
    CHAIR = "chair"
    BED = "bed"

    @property
    def category(self) -> SemanticCategory:
        """Semantic category painted for this furniture."""
        return SemanticCategory(self.value)


# Width and height ranges in pixels.
FURNITURE_SIZES: dict[FurnitureKind, tuple[tuple[int, int], tuple[int, int]]] = {
    FurnitureKind.TABLE: ((50, 80), (30, 40)),
    FurnitureKind.CHAIR: ((25, 35), (40, 55)),
    FurnitureKind.BED: ((80, 120), (30, 45)),
}

FURNITURE_COLORS: dict[FurnitureKind, tuple[int, int, int]] = {
    FurnitureKind.TABLE: (120, 80, 40),
    FurnitureKind.CHAIR: (160, 40, 40),
    FurnitureKind.BED: (60, 90, 170),
}


@dataclass(frozen=True)
class Furniture:
    """Axis-aligned furniture box, ``x0 <= x < x1``, ``y0 <= y < y1``."""

    kind: FurnitureKind
    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def seatable(self) -> bool:
        """People can sit on chairs and beds."""
        return self.kind in {FurnitureKind.CHAIR, FurnitureKind.BED}


@dataclass
class SyntheticScene:
    """All rasters and annotations of one generated scene."""

    image: np.ndarray
    raw: np.ndarray
    semantic: np.ndarray
    depth: np.ndarray
    mask: np.ndarray
    horizon: int
    furniture: list[Furniture] = field(default_factory=list)
    poses: list[Pose] = field(default_factory=list)
    kinds: list[PoseKind] = field(default_factory=list)


def _place_furniture(rng: np.random.Generator, horizon: int, size: int) -> list[Furniture]:
    placed: list[Furniture] = []
    for _ in range(int(rng.integers(0, 3))):
        kind = FurnitureKind(rng.choice([k.value for k in FurnitureKind]))
        (w_lo, w_hi), (h_lo, h_hi) = FURNITURE_SIZES[kind]
        for _attempt in range(10):
            w = int(rng.integers(w_lo, w_hi + 1))
            h = int(rng.integers(h_lo, h_hi + 1))
            x0 = int(rng.integers(4, size - w - 4))
            base = int(rng.integers(horizon + 30, size - 10))
            box = Furniture(kind, x0, base - h, x0 + w, base)
            if all(box.x1 <= other.x0 or other.x1 <= box.x0 for other in placed):
                placed.append(box)
                break
    return placed


def _paint(
    rng: np.random.Generator,
    horizon: int,
    furniture: list[Furniture],
    size: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    raw = np.full((size, size), SYNTH_RAW_IDS[SemanticCategory.WALL], dtype=np.uint8)
    raw[:CEILING_HEIGHT] = SYNTH_RAW_IDS[SemanticCategory.BACKGROUND]
    raw[horizon:] = SYNTH_RAW_IDS[SemanticCategory.FLOOR]

    wall_color = rng.integers(150, 230, size=3)
    floor_color = rng.integers(60, 140, size=3)
    image = np.empty((size, size, 3), dtype=np.float64)
    image[:] = wall_color
    image[:CEILING_HEIGHT] = (235, 235, 235)
    image[horizon:] = floor_color

    rows = np.arange(size, dtype=np.float64)[:, None]
    depth = np.where(
        rows < horizon,
        np.full((size, size), 60.0),
        60.0 + 160.0 * (rows - horizon) / max(size - 1 - horizon, 1),
    )

    # Painter's order: boxes further back first.
    for box in sorted(furniture, key=lambda b: b.y1):
        raw[box.y0 : box.y1, box.x0 : box.x1] = SYNTH_RAW_IDS[box.kind.category]
        image[box.y0 : box.y1, box.x0 : box.x1] = FURNITURE_COLORS[box.kind]
        depth[box.y0 : box.y1, box.x0 : box.x1] = depth[box.y1 - 1, box.x0]

    image += rng.normal(0.0, 4.0, size=image.shape)
    return (
        np.clip(np.rint(image), 0, 255).astype(np.uint8),
        raw,
        np.clip(np.rint(depth), 0, 255).astype(np.uint8),
    )


def _pose_from_prototype(
    rng: np.random.Generator,
    prototype: np.ndarray,
    center: tuple[float, float],
    scale: tuple[float, float],
) -> Pose:
    template = np.clip(prototype + rng.normal(0.0, POSE_JITTER, size=prototype.shape), 0.0, 1.0)
    return apply_transform(template, TransformParams(np.array(center), np.array(scale)))


def _standing_pose(rng: np.random.Generator, horizon: int, size: int) -> Pose:
    height = float(rng.uniform(*STANDING_HEIGHT))
    width = height * float(rng.uniform(0.35, 0.5))
    feet = float(rng.uniform(max(horizon + 10, height + 2), size - 6))
    cx = float(rng.uniform(width / 2 + 2, size - width / 2 - 2))
    return _pose_from_prototype(rng, STANDING_PROTOTYPE, (cx, feet - height / 2), (width, height))


def _sitting_pose(rng: np.random.Generator, seat: Furniture) -> Pose:
    height = float(rng.uniform(*SITTING_HEIGHT))
    width = height * float(rng.uniform(0.5, 0.7))
    cx = float(rng.uniform(seat.x0, seat.x1))
    return _pose_from_prototype(rng, SITTING_PROTOTYPE, (cx, seat.y1 - height / 2), (width, height))


def feasible_mask(horizon: int, furniture: list[Furniture], size: int = FRAME_SIZE) -> np.ndarray:
    """Centres any generated pose could have: 255 inside, 0 outside."""
    mask = np.zeros((size, size), dtype=np.uint8)
    lo_half, hi_half = STANDING_HEIGHT[0] / 2, STANDING_HEIGHT[1] / 2
    top = max(int(np.floor(horizon + 10 - hi_half)), 0)
    bottom = min(int(np.ceil(size - 6 - lo_half)), size - 1)
    margin = int(STANDING_HEIGHT[0] * 0.35 / 2)
    mask[top : bottom + 1, margin : size - margin] = 255
    for box in furniture:
        if not box.seatable:
            continue
        s_top = max(int(np.floor(box.y1 - SITTING_HEIGHT[1] / 2)), 0)
        s_bottom = min(int(np.ceil(box.y1 - SITTING_HEIGHT[0] / 2)), size - 1)
        mask[s_top : s_bottom + 1, box.x0 : box.x1] = 255
    return mask


def generate_scene(rng: np.random.Generator, size: int = FRAME_SIZE) -> SyntheticScene:
    """One scene with one or two poses."""
    horizon = int(rng.integers(HORIZON_RANGE[0], HORIZON_RANGE[1] + 1))
    furniture = _place_furniture(rng, horizon, size)
    image, raw, depth = _paint(rng, horizon, furniture, size)
    scene = SyntheticScene(
        image=image,
        raw=raw,
        semantic=quantize_labels(raw, 8),
        depth=depth,
        mask=feasible_mask(horizon, furniture, size),
        horizon=horizon,
        furniture=furniture,
    )
    seats = [box for box in furniture if box.seatable]
    for _ in range(int(rng.integers(1, 3))):
        if seats and rng.random() < 0.5:
            seat = seats[int(rng.integers(len(seats)))]
            scene.poses.append(_sitting_pose(rng, seat))
            scene.kinds.append(PoseKind.SITTING)
        else:
            scene.poses.append(_standing_pose(rng, horizon, size))
            scene.kinds.append(PoseKind.STANDING)
    return scene


def synth_generate(out_dir: Path, *, seed: int = 0, n_scenes: int = 200, size: int = FRAME_SIZE) -> list[ManifestRecord]:
    """Write ``n_scenes`` scenes plus a manifest under ``out_dir``.

    The last fifth of the records (by index) form the test split.

    Raises
    ------
    InputError
        If ``n_scenes`` is below 1.

    """
    if n_scenes < 1:
        raise InputError(f"need at least one scene, got {n_scenes}")
    rng = np.random.default_rng(seed)
    records: list[ManifestRecord] = []
    counter = scenes_generated_counter()
    test_start = n_scenes - int(n_scenes * TEST_FRACTION + 1e-9)
    for index in range(n_scenes):
        scene = generate_scene(rng, size)
        name = f"{index:04d}"
        record = ManifestRecord(
            id=name,
            scene=f"scenes/{name}.png",
            semantic=f"semantic/{name}.png",
            raw=f"raw/{name}.png",
            depth=f"depth/{name}.png",
            mask=f"masks/{name}.png",
            poses=f"poses/{name}.json",
            height=size,
            width=size,
            pose_kinds=list(scene.kinds),
            split="test" if index >= test_start else "train",
        )
        write_rgb_png(out_dir / record.scene, scene.image)
        write_gray_png(out_dir / record.semantic, scene.semantic)
        write_gray_png(out_dir / record.raw, scene.raw)
        write_gray_png(out_dir / record.depth, scene.depth)
        write_gray_png(out_dir / record.mask, scene.mask)
        write_json(out_dir / record.poses, [pose.to_triples() for pose in scene.poses])
        records.append(record)
        counter.inc()
    write_manifest(out_dir / "manifest.jsonl", records)
    logger.info("Generated synthetic dataset", path=str(out_dir), scenes=n_scenes, seed=seed)
    return records

