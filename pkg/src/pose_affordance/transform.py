"""Composition of a template with centre, scale and deformation, and its inverse.

For keypoint ``i`` of a normalized template ``(x_i, y_i)``::

    x̄_i = (w / w0) * ((x_i * Δx + dx_i) + (x0 - Δx / 2))
    ȳ_i = (h / h0) * ((y_i * Δy + dy_i) + (y0 - Δy / 2))

Centre, scale and deformations live in the 256-frame; ``(h, w)`` is the
scene size and ``(h0, w0)`` the network frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.constants import FRAME_SIZE, NUM_KEYPOINTS
from .core.error_handling import InputError, validate_shape
from .templates.pose import Pose, normalize_pose


@dataclass(frozen=True)
class TransformParams:
    """Centre ``o``, size ``s`` and per-keypoint offsets ``d``, all in the 256-frame."""

    center: np.ndarray
    scale: np.ndarray
    deformation: np.ndarray = field(default_factory=lambda: np.zeros((NUM_KEYPOINTS, 2)))
    scene_size: tuple[int, int] = (FRAME_SIZE, FRAME_SIZE)
    frame_size: tuple[int, int] = (FRAME_SIZE, FRAME_SIZE)

    def __post_init__(self) -> None:
        """Coerce arrays to ``(2,)``, ``(2,)`` and ``(16, 2)``."""
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(2))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64).reshape(2))
        object.__setattr__(
            self,
            "deformation",
            np.asarray(self.deformation, dtype=np.float64).reshape(NUM_KEYPOINTS, 2),
        )

    @property
    def frame_ratio(self) -> np.ndarray:
        """``(w / w0, h / h0)``."""
        height, width = self.scene_size
        h0, w0 = self.frame_size
        return np.array([width / w0, height / h0])

    def vector(self) -> np.ndarray:
        """Flattened ``(x0, y0, Δx, Δy, dx1, dy1, ..., dx16, dy16)``."""
        return np.concatenate([self.center, self.scale, self.deformation.reshape(-1)])


def apply_transform(template: np.ndarray, params: TransformParams) -> Pose:
    """Place a normalized ``16×2`` template in the scene frame.

    Raises
    ------
    InputError
        If either scale component is not positive.
    DimensionError
        If the template is not 16×2.

    """
    if np.any(params.scale <= 0):
        raise InputError(f"scale must be positive, got {params.scale.tolist()}")
    template = validate_shape(np.asarray(template, dtype=np.float64), (NUM_KEYPOINTS, 2), "template")
    frame = template * params.scale + params.deformation + (params.center - params.scale / 2.0)
    return Pose(frame * params.frame_ratio)


def invert_transform(
    gt: Pose,
    template: np.ndarray,
    scene_size: tuple[int, int] = (FRAME_SIZE, FRAME_SIZE),
    frame_size: tuple[int, int] = (FRAME_SIZE, FRAME_SIZE),
) -> TransformParams:
    """Recover centre, scale and deformation that map ``template`` onto ``gt``.

    ``gt`` is converted to the 256-frame, its bounding box fixes centre and
    scale, and the deformation is the remaining per-keypoint residual.

    Raises
    ------
    DegeneratePoseError
        If ``gt`` has no extent.

    """
    height, width = scene_size
    h0, w0 = frame_size
    in_frame = gt.scaled(w0 / width, h0 / height)
    normalized = normalize_pose(in_frame)
    template = validate_shape(np.asarray(template, dtype=np.float64), (NUM_KEYPOINTS, 2), "template")
    offset = normalized.center - normalized.scale / 2.0
    deformation = in_frame.keypoints - offset - template * normalized.scale
    return TransformParams(
        normalized.center,
        normalized.scale,
        deformation,
        scene_size=scene_size,
        frame_size=frame_size,
    )
