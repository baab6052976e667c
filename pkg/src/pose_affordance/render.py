"""Skeleton overlays and location-density heatmaps as PNG files."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from PIL import Image, ImageColor, ImageDraw, ImageFilter

from .core.constants import LIMBS
from .core.logging import get_logger

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from .templates import Pose

logger = get_logger(__name__)

LINE_WIDTH = 2
KEYPOINT_RADIUS = 3
HEATMAP_BLUR = 6.0
HEATMAP_OPACITY = 0.6


def person_color(index: int, total: int) -> tuple[int, int, int]:
    """Fully saturated hue ``index`` of ``total`` evenly spaced hues."""
    hue = round(360 * index / max(total, 1)) % 360
    return ImageColor.getrgb(f"hsv({hue},100%,100%)")[:3]


def _canvas(image: np.ndarray) -> Image.Image:
    return Image.fromarray(np.asarray(image, dtype=np.uint8)).convert("RGB")


def draw_skeleton(
    draw: ImageDraw.ImageDraw,
    pose: Pose,
    color: tuple[int, int, int],
    *,
    width: int = LINE_WIDTH,
    radius: int = KEYPOINT_RADIUS,
) -> None:
    """Limbs in MPII connectivity, then keypoints as filled discs; invisible keypoints are skipped."""
    pts = pose.keypoints
    for a, b in LIMBS:
        if pose.visible[a] and pose.visible[b]:
            draw.line([tuple(pts[a]), tuple(pts[b])], fill=color, width=width)
    for (x, y), visible in zip(pts, pose.visible, strict=True):
        if visible:
            draw.ellipse([x - radius, y - radius, x + radius, y + radius], fill=color, outline=(0, 0, 0))


def render_overlay(image: np.ndarray, poses: Sequence[Pose]) -> Image.Image:
    """Scene image with one coloured skeleton per pose (scene pixels)."""
    canvas = _canvas(image)
    draw = ImageDraw.Draw(canvas)
    for index, pose in enumerate(poses):
        draw_skeleton(draw, pose, person_color(index, len(poses)))
    return canvas


def save_overlay(path: Path, image: np.ndarray, poses: Sequence[Pose]) -> Path:
    """Write :func:`render_overlay` as PNG."""
    path.parent.mkdir(parents=True, exist_ok=True)
    render_overlay(image, poses).save(path, format="PNG")
    logger.debug("Wrote overlay", path=str(path), poses=len(poses))
    return path


def density_map(points: np.ndarray, height: int, width: int, *, blur: float = HEATMAP_BLUR) -> np.ndarray:
    """Blurred 2-D histogram of ``points`` (scene pixels), scaled so the peak is 1.

    Points outside the scene are dropped; an empty map stays all zero.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    counts, _, _ = np.histogram2d(pts[:, 1], pts[:, 0], bins=(height, width), range=((0, height), (0, width)))
    if counts.max() <= 0:
        return np.zeros((height, width))
    raster = Image.fromarray(np.rint(255 * counts / counts.max()).astype(np.uint8))
    blurred = np.asarray(raster.filter(ImageFilter.GaussianBlur(blur)), dtype=np.float64)
    peak = blurred.max()
    return blurred / peak if peak > 0 else blurred


def render_heatmap(
    image: np.ndarray,
    density: np.ndarray,
    color: tuple[int, int, int],
    *,
    opacity: float = HEATMAP_OPACITY,
) -> Image.Image:
    """Blend ``color`` over the scene with per-pixel weight ``opacity × density``."""
    canvas = np.asarray(_canvas(image), dtype=np.float64)
    weight = (opacity * np.clip(density, 0.0, 1.0))[:, :, None]
    blended = canvas * (1.0 - weight) + np.asarray(color, dtype=np.float64) * weight
    return Image.fromarray(np.clip(np.rint(blended), 0, 255).astype(np.uint8))


def render_distribution(
    out_dir: Path,
    image: np.ndarray,
    centers: np.ndarray,
    classes: np.ndarray,
    num_classes: int,
) -> list[Path]:
    """One heatmap PNG per template class of the centres (scene pixels) sampled with that class.

    Returns
    -------
    list[Path]
        ``class-<i>.png`` for every class, in class order.

    """
    height, width = np.asarray(image).shape[:2]
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    classes = np.asarray(classes).reshape(-1)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for cls in range(num_classes):
        selected = centers[classes == cls]
        heatmap = render_heatmap(image, density_map(selected, height, width), person_color(cls, num_classes))
        path = out_dir / f"class-{cls}.png"
        heatmap.save(path, format="PNG")
        paths.append(path)
        logger.debug("Wrote distribution heatmap", path=str(path), template_class=cls, samples=len(selected))
    return paths
