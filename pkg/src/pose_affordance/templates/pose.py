"""Pose containers and bounding-box normalization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.constants import NUM_KEYPOINTS
from ..core.error_handling import DegeneratePoseError, DimensionError

DEGENERATE_SPAN = 1e-6


@dataclass(frozen=True)
class Pose:
    """16 MPII keypoints ``(x, y)`` with per-keypoint visibility."""

    keypoints: np.ndarray
    visible: np.ndarray = field(default_factory=lambda: np.ones(NUM_KEYPOINTS, dtype=bool))

    def __post_init__(self) -> None:
        """Coerce arrays and check the keypoint count."""
        keypoints = np.asarray(self.keypoints, dtype=np.float64)
        visible = np.asarray(self.visible, dtype=bool)
        if keypoints.shape != (NUM_KEYPOINTS, 2) or visible.shape != (NUM_KEYPOINTS,):
            raise DimensionError(
                f"a pose has {NUM_KEYPOINTS} keypoints, got {keypoints.shape} with visibility {visible.shape}"
            )
        object.__setattr__(self, "keypoints", keypoints)
        object.__setattr__(self, "visible", visible)

    @classmethod
    def from_triples(cls, triples: list[list[float]]) -> Pose:
        """Build from ``[[x, y, visible], ...]``."""
        arr = np.asarray(triples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise DimensionError(f"pose triples must be N×3, got {arr.shape}")
        return cls(arr[:, :2], arr[:, 2] > 0)

    def to_triples(self) -> list[list[float]]:
        """Serialize as ``[[x, y, visible], ...]``."""
        return [
            [float(x), float(y), 1 if v else 0]
            for (x, y), v in zip(self.keypoints, self.visible, strict=True)
        ]

    def scaled(self, sx: float, sy: float) -> Pose:
        """Pose with x multiplied by ``sx`` and y by ``sy``."""
        return Pose(self.keypoints * np.array([sx, sy]), self.visible.copy())


@dataclass(frozen=True)
class NormalizedPose:
    """A pose normalized to its bounding box plus the box centre and size."""

    coords: np.ndarray
    center: np.ndarray
    scale: np.ndarray

    def flat(self) -> np.ndarray:
        """32-dim row-major vector ``(x0, y0, x1, y1, ...)``."""
        return self.coords.reshape(-1)


def impute_invisible(pose: Pose) -> np.ndarray:
    """Keypoints with invisible ones moved to the visible bounding-box centre."""
    coords = pose.keypoints.copy()
    visible = pose.visible
    if visible.all() or not visible.any():
        return coords
    lo = coords[visible].min(axis=0)
    hi = coords[visible].max(axis=0)
    coords[~visible] = (lo + hi) / 2.0
    return coords


def normalize_pose(pose: Pose) -> NormalizedPose:
    """Map a pose into ``[0, 1]²`` by its bounding box.

    A degenerate axis (span below 1e-6) gets coordinate 0.5 and scale 1e-6.

    Raises
    ------
    DegeneratePoseError
        If all keypoints coincide.

    """
    coords = impute_invisible(pose)
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = hi - lo
    degenerate = span < DEGENERATE_SPAN
    if degenerate.all():
        raise DegeneratePoseError()
    scale = np.where(degenerate, DEGENERATE_SPAN, span)
    normalized = np.where(degenerate, 0.5, (coords - lo) / np.where(degenerate, 1.0, span))
    return NormalizedPose(normalized, (lo + hi) / 2.0, scale)
