"""PNG and JSON file helpers."""

from __future__ import annotations

import json
from typing import TYPE_CHECKING, Any

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..core.error_handling import FormatError, NotFoundError

if TYPE_CHECKING:
    from pathlib import Path


def write_rgb_png(path: Path, image: np.ndarray) -> None:
    """Save an ``h×w×3`` uint8 array."""
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(path, format="PNG")


def write_gray_png(path: Path, image: np.ndarray) -> None:
    """Save an ``h×w`` uint8 array as 8-bit grayscale."""
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(path, format="PNG")


def read_png(path: Path, *, gray: bool = False) -> np.ndarray:
    """Load a PNG as uint8, ``h×w`` when ``gray`` else ``h×w×3``.

    Raises
    ------
    NotFoundError
        If the file is missing.
    FormatError
        If it is not a readable image.

    """
    if not path.is_file():
        raise NotFoundError(f"image not found: {path}", path=str(path))
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L" if gray else "RGB"), dtype=np.uint8).copy()
    except (UnidentifiedImageError, OSError) as e:
        raise FormatError(f"cannot read image {path}: {e}", path=str(path)) from e


def write_json(path: Path, payload: Any) -> None:
    """Write compact, key-sorted JSON."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: Path) -> Any:
    """Load JSON.

    Raises
    ------
    NotFoundError
        If the file is missing.
    FormatError
        If it is not valid JSON.

    """
    if not path.is_file():
        raise NotFoundError(f"file not found: {path}", path=str(path))
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON in {path}: {e}", path=str(path)) from e
