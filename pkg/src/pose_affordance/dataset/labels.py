"""Semantic label quantization into the reduced grayscale palettes.

Mode 8 keeps the eight categories, mode 4 splits fixed and movable
structure, mode 3 splits human and non-human, mode 2 merges everything into
foreground, and mode 150 spreads the raw ids evenly over 0..255.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..core.config_models import LABEL_MODES
from ..core.constants import (
    CATEGORY_PALETTE,
    FIXED_CATEGORIES,
    MOVABLE_CATEGORIES,
    NUM_RAW_LABELS,
    SemanticCategory,
    default_label_mapping,
)
from ..core.error_handling import FormatError, InputError, NotFoundError
from ..core.logging import get_logger
from ..core.telemetry import unmapped_label_counter

if TYPE_CHECKING:
    from pathlib import Path

logger = get_logger(__name__)

FOREGROUND = 252
NON_HUMAN = 126
FIXED = 84
MOVABLE = 168


class LabelMappingFile(BaseModel):
    """Editable raw-id table: category name to the raw ids it absorbs."""

    categories: dict[SemanticCategory, list[int]] = Field(default_factory=dict)


def load_label_mapping(path: Path | None) -> dict[int, SemanticCategory]:
    """Read a mapping table, or return the built-in default for None.

    Raw ids absent from a file are left unmapped.

    Raises
    ------
    NotFoundError
        If the file is missing.
    FormatError
        If it is not a valid table or an id is outside 0..149.

    """
    if path is None:
        return default_label_mapping()
    if not path.is_file():
        raise NotFoundError(f"label mapping file not found: {path}", path=str(path))
    try:
        table = LabelMappingFile.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise FormatError(f"invalid label mapping {path}: {e.error_count()} errors", path=str(path)) from e
    mapping: dict[int, SemanticCategory] = {}
    for category, ids in table.categories.items():
        for raw_id in ids:
            if not 0 <= raw_id < NUM_RAW_LABELS:
                raise FormatError(f"raw label {raw_id} in {path} is outside 0..{NUM_RAW_LABELS - 1}", path=str(path))
            mapping[raw_id] = category
    return mapping


def category_value(category: SemanticCategory, mode: int) -> int:
    """Gray value of ``category`` in a category-based mode (2, 3, 4 or 8)."""
    if category is SemanticCategory.BACKGROUND:
        return 0
    if mode == 8:
        return CATEGORY_PALETTE[category]
    if mode == 2:
        return FOREGROUND
    if category is SemanticCategory.PERSON:
        return FOREGROUND
    if mode == 3:
        return NON_HUMAN
    if mode == 4:
        if category in FIXED_CATEGORIES:
            return FIXED
        if category in MOVABLE_CATEGORIES:
            return MOVABLE
    raise InputError(f"label mode {mode} has no category values")


def raw_value(raw_id: int) -> int:
    """Gray value of a raw id in mode 150."""
    return round(raw_id * 255 / (NUM_RAW_LABELS - 1))


def palette_values(mode: int) -> frozenset[int]:
    """Every gray value a map in ``mode`` may contain.

    Raises
    ------
    InputError
        If ``mode`` is not a known granularity.

    """
    if mode not in LABEL_MODES:
        raise InputError(f"label mode must be one of {LABEL_MODES}, got {mode}")
    if mode == NUM_RAW_LABELS:
        return frozenset(raw_value(i) for i in range(NUM_RAW_LABELS))
    return frozenset(category_value(c, mode) for c in SemanticCategory)


def quantize_labels(
    raw: np.ndarray,
    mode: int,
    mapping: dict[int, SemanticCategory] | None = None,
) -> np.ndarray:
    """Turn a raw-id map into a palette map of the given granularity.

    Raw ids without a mapping (or outside 0..149) become background; their
    pixel count is logged and added to the unmapped-label counter.

    Raises
    ------
    InputError
        If ``mode`` is not a known granularity.

    """
    if mode not in LABEL_MODES:
        raise InputError(f"label mode must be one of {LABEL_MODES}, got {mode}")
    mapping = default_label_mapping() if mapping is None else mapping
    raw = np.asarray(raw)
    lut = np.zeros(256, dtype=np.uint8)
    known = np.zeros(256, dtype=bool)
    for raw_id in range(NUM_RAW_LABELS):
        if mode == NUM_RAW_LABELS:
            lut[raw_id] = raw_value(raw_id)
            known[raw_id] = True
        elif raw_id in mapping:
            lut[raw_id] = category_value(mapping[raw_id], mode)
            known[raw_id] = True

    indices = np.clip(raw, 0, 255).astype(np.intp)
    unknown = ~known[indices] | (raw < 0) | (raw > 255)
    if unknown.any():
        ids = sorted(int(v) for v in np.unique(raw[unknown]))
        count = int(unknown.sum())
        unmapped_label_counter().inc(count)
        logger.warning("Unmapped raw labels set to background", labels=ids, pixels=count)
    out = lut[indices]
    out[unknown] = 0
    return out


def requantize(semantic: np.ndarray, mode: int) -> np.ndarray:
    """Derive a coarser map (mode 2, 3, 4 or 8) from an 8-category map.

    Raises
    ------
    InputError
        If ``mode`` is 150, which needs the raw ids.
    FormatError
        If ``semantic`` holds values outside the 8-category palette.

    """
    if mode == NUM_RAW_LABELS:
        raise InputError("mode 150 needs the raw label map")
    validate_palette(semantic, 8)
    lut = np.zeros(256, dtype=np.uint8)
    for category, value in CATEGORY_PALETTE.items():
        lut[value] = category_value(category, mode)
    return lut[np.asarray(semantic, dtype=np.uint8)]


def validate_palette(label_map: np.ndarray, mode: int, *, source: str = "<map>") -> None:
    """Check palette closure.

    Raises
    ------
    FormatError
        If any pixel value is outside the palette of ``mode``.

    """
    allowed = np.array(sorted(palette_values(mode)))
    present = np.unique(np.asarray(label_map))
    stray = present[~np.isin(present, allowed)]
    if stray.size:
        raise FormatError(
            f"{source} has values outside the mode-{mode} palette: {stray[:8].tolist()}",
            path=source,
        )
