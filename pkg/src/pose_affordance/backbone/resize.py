"""Bilinear rescaling to the network input size."""

from __future__ import annotations

import numpy as np

from ..core.constants import FRAME_SIZE
from ..core.error_handling import InputError


def _axis_weights(size_in: int, size_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Half-pixel centres (corners not aligned), clamped at the borders.
    src = (np.arange(size_out, dtype=np.float64) + 0.5) * (size_in / size_out) - 0.5
    src = np.clip(src, 0.0, size_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, size_in - 1)
    return lo, hi, src - lo


def resize_bilinear(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of an ``h×w`` or ``h×w×c`` array.

    Values are clamped to the input range. Returns float64.

    Raises
    ------
    InputError
        If the image is empty.

    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim < 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"cannot resize an empty image of shape {arr.shape}")
    if arr.shape[0] == height and arr.shape[1] == width:
        return arr.copy()
    y0, y1, wy = _axis_weights(arr.shape[0], height)
    x0, x1, wx = _axis_weights(arr.shape[1], width)
    if arr.ndim == 3:
        wy = wy[:, None, None]
        wx = wx[None, :, None]
    else:
        wy = wy[:, None]
        wx = wx[None, :]
    top = arr[y0][:, x0] * (1 - wx) + arr[y0][:, x1] * wx
    bottom = arr[y1][:, x0] * (1 - wx) + arr[y1][:, x1] * wx
    out = top * (1 - wy) + bottom * wy
    return np.clip(out, arr.min(), arr.max())


def resize_to_input(img: np.ndarray, size: int = FRAME_SIZE) -> np.ndarray:
    """Rescale any image to ``size×size`` (256×256 by default)."""
    return resize_bilinear(img, size, size)


def to_three_channels(img: np.ndarray) -> np.ndarray:
    """Replicate a grayscale map to three channels; RGB passes through."""
    arr = np.asarray(img)
    if arr.ndim == 2:
        return np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim == 3 and arr.shape[2] == 1:
        return np.repeat(arr, 3, axis=2)
    return arr
