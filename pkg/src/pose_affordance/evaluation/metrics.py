"""Pose metrics in the 256-frame: PCK, PCKh, AKD, MAE, MSE, SIM and IOU."""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from ..core.constants import Keypoint
from ..core.error_handling import MetricUndefinedError
from ..core.logging import get_logger
from ..core.telemetry import metric_undefined_counter
from ..templates.pose import Pose

logger = get_logger(__name__)

METRIC_COLUMNS: tuple[str, ...] = ("pck", "pckh", "akd", "mae", "mse", "sim", "iou")
METRIC_TITLES: dict[str, str] = {
    "pck": "PCK",
    "pckh": "PCKh",
    "akd": "AKD",
    "mae": "MAE",
    "mse": "MSE",
    "sim": "SIM",
    "iou": "IOU",
}

PosesLike = Pose | np.ndarray


def _coords(pose: PosesLike) -> np.ndarray:
    if isinstance(pose, Pose):
        return pose.keypoints
    return np.asarray(pose, dtype=np.float64).reshape(-1, 2)


def _distances(pred: PosesLike, gt: PosesLike) -> np.ndarray:
    return np.linalg.norm(_coords(pred) - _coords(gt), axis=1)


def _fraction_within(pred: PosesLike, gt: PosesLike, reference: float, factor: float, metric: str) -> float:
    if reference <= 0.0:
        raise MetricUndefinedError(metric, "reference length is zero")
    return float(np.mean(_distances(pred, gt) <= factor * reference))


def torso_width(gt: PosesLike) -> float:
    """Left shoulder to right hip distance."""
    kp = _coords(gt)
    return float(np.linalg.norm(kp[Keypoint.L_SHOULDER] - kp[Keypoint.R_HIP]))


def head_size(gt: PosesLike) -> float:
    """Head top to upper neck distance."""
    kp = _coords(gt)
    return float(np.linalg.norm(kp[Keypoint.HEAD_TOP] - kp[Keypoint.UPPER_NECK]))


def pck(pred: PosesLike, gt: PosesLike, alpha: float = 0.2) -> float:
    """Fraction of keypoints within ``alpha`` times the ground-truth torso width.

    Raises
    ------
    MetricUndefinedError
        If the torso width is zero.

    """
    return _fraction_within(pred, gt, torso_width(gt), alpha, "pck")


def pckh(pred: PosesLike, gt: PosesLike, beta: float = 0.5) -> float:
    """Fraction of keypoints within ``beta`` times the ground-truth head size.

    Raises
    ------
    MetricUndefinedError
        If the head size is zero.

    """
    return _fraction_within(pred, gt, head_size(gt), beta, "pckh")


def akd(pred: PosesLike, gt: PosesLike) -> float:
    """Average keypoint Euclidean distance."""
    return float(np.mean(_distances(pred, gt)))


def mae(pred: PosesLike, gt: PosesLike) -> float:
    """Mean absolute coordinate deviation."""
    return float(np.mean(np.abs(_coords(pred) - _coords(gt))))


def mse(pred: PosesLike, gt: PosesLike) -> float:
    """Mean squared coordinate deviation."""
    return float(np.mean((_coords(pred) - _coords(gt)) ** 2))


def cos_sim(pred: PosesLike, gt: PosesLike) -> float:
    """Mean cosine similarity of keypoint position vectors about the origin.

    A zero vector scores 1 against another zero vector and 0 otherwise.
    """
    p = _coords(pred)
    g = _coords(gt)
    pn = np.linalg.norm(p, axis=1)
    gn = np.linalg.norm(g, axis=1)
    both_zero = (pn == 0) & (gn == 0)
    either_zero = (pn == 0) | (gn == 0)
    safe = np.where(either_zero, 1.0, pn * gn)
    sims = np.where(either_zero, np.where(both_zero, 1.0, 0.0), np.sum(p * g, axis=1) / safe)
    return float(np.mean(sims))


def bounding_box(pose: PosesLike) -> tuple[float, float, float, float]:
    """``(x_min, y_min, x_max, y_max)`` of all keypoints."""
    kp = _coords(pose)
    lo = kp.min(axis=0)
    hi = kp.max(axis=0)
    return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def iou(pred: PosesLike, gt: PosesLike) -> float:
    """Intersection over union of the keypoint bounding boxes.

    Raises
    ------
    MetricUndefinedError
        If either box has zero area.

    """
    ax0, ay0, ax1, ay1 = bounding_box(pred)
    bx0, by0, bx1, by1 = bounding_box(gt)
    area_a = (ax1 - ax0) * (ay1 - ay0)
    area_b = (bx1 - bx0) * (by1 - by0)
    if area_a <= 0.0 or area_b <= 0.0:
        raise MetricUndefinedError("iou", "bounding box has zero area")
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    return inter / (area_a + area_b - inter)


@dataclass
class EvalReport:
    """Per-sample values (NaN where undefined), means and exclusion counts."""

    alpha: float
    beta: float
    values: dict[str, list[float]] = field(default_factory=lambda: {name: [] for name in METRIC_COLUMNS})
    undefined: dict[str, int] = field(default_factory=lambda: dict.fromkeys(METRIC_COLUMNS, 0))
    frame: str = "256x256"

    @property
    def count(self) -> int:
        """Number of evaluated pairs."""
        return len(self.values["akd"])

    def mean(self, metric: str) -> float:
        """Mean over samples where ``metric`` is defined; NaN if none is."""
        arr = np.asarray(self.values[metric], dtype=np.float64)
        defined = arr[~np.isnan(arr)]
        return float(defined.mean()) if defined.size else float("nan")

    def means(self) -> dict[str, float]:
        """Means of every metric in column order."""
        return {name: self.mean(name) for name in METRIC_COLUMNS}


def evaluate_pairs(
    pairs: Iterable[tuple[PosesLike, PosesLike]],
    *,
    alpha: float = 0.2,
    beta: float = 0.5,
) -> EvalReport:
    """Score ``(pred, gt)`` pairs with all seven metrics.

    Samples for which a metric is undefined get NaN for that metric, are
    left out of its mean and are counted in ``undefined``.
    """
    report = EvalReport(alpha=alpha, beta=beta)
    scorers: dict[str, Callable[[PosesLike, PosesLike], float]] = {
        "pck": lambda p, g: pck(p, g, alpha),
        "pckh": lambda p, g: pckh(p, g, beta),
        "akd": akd,
        "mae": mae,
        "mse": mse,
        "sim": cos_sim,
        "iou": iou,
    }
    counter = metric_undefined_counter()
    for index, (pred, gt) in enumerate(pairs):
        for name, scorer in scorers.items():
            try:
                value = scorer(pred, gt)
            except MetricUndefinedError as e:
                report.undefined[name] += 1
                counter.labels(metric=name).inc()
                logger.debug("Metric undefined for sample", metric=name, sample=index, reason=str(e))
                value = float("nan")
            report.values[name].append(value)
    return report
