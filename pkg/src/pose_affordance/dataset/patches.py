"""Square crops around a location, zero-filled outside the scene."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..backbone.resize import resize_to_input
from ..core.constants import FRAME_SIZE


class PatchKind(str, Enum):
    """Patch A spans the scene height, patch B half of it."""

    A = "a"
    B = "b"


@dataclass(frozen=True)
class PatchSpec:
    """Centre in scene pixels and side length in scene pixels."""

    center: tuple[float, float]
    side: int

    @classmethod
    def around(
        cls,
        center_frame: np.ndarray | tuple[float, float],
        scene_size: tuple[int, int],
        kind: PatchKind,
    ) -> PatchSpec:
        """Spec for patch ``kind`` around a 256-frame centre in a scene of ``(h, w)``."""
        height, width = scene_size
        cx = float(center_frame[0]) * width / FRAME_SIZE
        cy = float(center_frame[1]) * height / FRAME_SIZE
        side = height if kind is PatchKind.A else max(1, height // 2)
        return cls((cx, cy), side)


def crop_patch(img: np.ndarray, spec: PatchSpec) -> np.ndarray:
    """``side×side`` crop centred on ``spec.center``; outside pixels are 0."""
    arr = np.asarray(img)
    height, width = arr.shape[:2]
    side = spec.side
    x0 = round(spec.center[0] - side / 2)
    y0 = round(spec.center[1] - side / 2)
    out = np.zeros((side, side, *arr.shape[2:]), dtype=arr.dtype)
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x0 + side, width), min(y0 + side, height)
    if sx1 > sx0 and sy1 > sy0:
        out[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = arr[sy0:sy1, sx0:sx1]
    return out


def extract_patch(img: np.ndarray, spec: PatchSpec) -> np.ndarray:
    """Zero-filled crop rescaled to the 256×256 network input."""
    return resize_to_input(crop_patch(img, spec))
