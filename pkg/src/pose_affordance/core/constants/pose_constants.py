"""Keypoint layout, frame sizes and label palettes."""

from __future__ import annotations

from enum import Enum

FRAME_SIZE = 256
"""Side of the square network frame in which all pose math happens."""

FEATURE_SIDE = 8
FEATURE_CHANNELS = 512
NUM_KEYPOINTS = 16


class Keypoint(int, Enum):
    """MPII keypoint order."""

    R_ANKLE = 0
    R_KNEE = 1
    R_HIP = 2
    L_HIP = 3
    L_KNEE = 4
    L_ANKLE = 5
    PELVIS = 6
    THORAX = 7
    UPPER_NECK = 8
    HEAD_TOP = 9
    R_WRIST = 10
    R_ELBOW = 11
    R_SHOULDER = 12
    L_SHOULDER = 13
    L_ELBOW = 14
    L_WRIST = 15


KEYPOINT_NAMES: tuple[str, ...] = tuple(k.name.lower().replace("_", "-") for k in Keypoint)

LIMBS: tuple[tuple[int, int], ...] = (
    (0, 1),
    (1, 2),
    (2, 6),
    (3, 6),
    (4, 3),
    (5, 4),
    (6, 7),
    (7, 8),
    (8, 9),
    (10, 11),
    (11, 12),
    (12, 7),
    (13, 7),
    (14, 13),
    (15, 14),
)
"""MPII skeleton connectivity used for rendering."""


class Modality(int, Enum):
    """Feature record modality byte."""

    IMAGE = 0
    SEMANTIC = 1
    DEPTH = 2


class SemanticCategory(str, Enum):
    """Reduced scene categories with their 8-level palette value."""

    BACKGROUND = "background"
    WALL = "wall"
    FLOOR = "floor"
    STAIRS = "stairs"
    TABLE = "table"
    CHAIR = "chair"
    BED = "bed"
    PERSON = "person"

    @property
    def palette_value(self) -> int:
        """Grayscale value in the 8-category map."""
        return CATEGORY_PALETTE[self]


CATEGORY_PALETTE: dict[SemanticCategory, int] = {
    SemanticCategory.BACKGROUND: 0,
    SemanticCategory.WALL: 36,
    SemanticCategory.FLOOR: 72,
    SemanticCategory.STAIRS: 108,
    SemanticCategory.TABLE: 144,
    SemanticCategory.CHAIR: 180,
    SemanticCategory.BED: 216,
    SemanticCategory.PERSON: 252,
}

FIXED_CATEGORIES = frozenset({SemanticCategory.WALL, SemanticCategory.FLOOR, SemanticCategory.STAIRS})
MOVABLE_CATEGORIES = frozenset({SemanticCategory.TABLE, SemanticCategory.CHAIR, SemanticCategory.BED})

NUM_RAW_LABELS = 150

# ADE20K-style raw ids (0-based) grouped into the reduced categories.
# Raw ids not listed here map to background.
DEFAULT_CATEGORY_IDS: dict[SemanticCategory, tuple[int, ...]] = {
    SemanticCategory.WALL: (0, 1, 25, 42),  # wall, building, house, column
    SemanticCategory.FLOOR: (3, 6, 11, 13, 28, 52),  # floor, road, sidewalk, earth, rug, path
    SemanticCategory.STAIRS: (53, 59, 96, 121),  # stairs, stairway, escalator, step
    SemanticCategory.TABLE: (15, 33, 45, 56, 64, 70, 73),  # table, desk, counter, ...
    SemanticCategory.CHAIR: (19, 23, 30, 31, 69, 75, 97, 110),  # chair, sofa, armchair, ...
    SemanticCategory.BED: (7, 117),  # bed, cradle
    SemanticCategory.PERSON: (12,),
}

# Raw ids the synthetic generator paints for each category.
SYNTH_RAW_IDS: dict[SemanticCategory, int] = {
    SemanticCategory.BACKGROUND: 5,  # ceiling
    SemanticCategory.WALL: 0,
    SemanticCategory.FLOOR: 3,
    SemanticCategory.STAIRS: 53,
    SemanticCategory.TABLE: 15,
    SemanticCategory.CHAIR: 19,
    SemanticCategory.BED: 7,
    SemanticCategory.PERSON: 12,
}


def default_label_mapping() -> dict[int, SemanticCategory]:
    """Complete raw-id to category table for all 150 raw labels."""
    mapping = dict.fromkeys(range(NUM_RAW_LABELS), SemanticCategory.BACKGROUND)
    for category, ids in DEFAULT_CATEGORY_IDS.items():
        for raw_id in ids:
            mapping[raw_id] = category
    return mapping
