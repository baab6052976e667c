"""Tests for pose metrics and report rendering."""

from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from pose_affordance.core.constants import Keypoint
from pose_affordance.core.error_handling import MetricUndefinedError
from pose_affordance.core.telemetry import get_metrics_manager
from pose_affordance.evaluation import (
    METRIC_COLUMNS,
    ReportRow,
    akd,
    bounding_box,
    cos_sim,
    evaluate_pairs,
    head_size,
    iou,
    mae,
    mse,
    pck,
    pckh,
    render_table,
    summary_dict,
    torso_width,
    write_report_csv,
    write_samples_csv,
)
from pose_affordance.templates import Pose


@pytest.fixture
def gt(rng: np.random.Generator) -> Pose:
    """A random pose in the 256-frame."""
    return Pose(rng.uniform(20.0, 230.0, size=(16, 2)))


def shifted(pose: Pose, dx: float, dy: float) -> Pose:
    return Pose(pose.keypoints + [dx, dy])


def brute_force(pred: np.ndarray, truth: np.ndarray, alpha: float, beta: float) -> dict[str, float]:
    """Loop-based reference implementation of every metric."""
    dists = [math.dist(p, g) for p, g in zip(pred, truth, strict=True)]
    torso = math.dist(truth[13], truth[2])
    head = math.dist(truth[9], truth[8])
    coords = [(p[k], g[k]) for p, g in zip(pred, truth, strict=True) for k in (0, 1)]
    sims = []
    for p, g in zip(pred, truth, strict=True):
        np_, ng = math.hypot(*p), math.hypot(*g)
        sims.append((p[0] * g[0] + p[1] * g[1]) / (np_ * ng))
    ax0, ay0 = min(p[0] for p in pred), min(p[1] for p in pred)
    ax1, ay1 = max(p[0] for p in pred), max(p[1] for p in pred)
    bx0, by0 = min(g[0] for g in truth), min(g[1] for g in truth)
    bx1, by1 = max(g[0] for g in truth), max(g[1] for g in truth)
    inter = max(0.0, min(ax1, bx1) - max(ax0, bx0)) * max(0.0, min(ay1, by1) - max(ay0, by0))
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return {
        "pck": sum(d <= alpha * torso for d in dists) / 16,
        "pckh": sum(d <= beta * head for d in dists) / 16,
        "akd": sum(dists) / 16,
        "mae": sum(abs(a - b) for a, b in coords) / 32,
        "mse": sum((a - b) ** 2 for a, b in coords) / 32,
        "sim": sum(sims) / 16,
        "iou": inter / union,
    }


class TestReferenceLengths:
    """Test torso width and head size."""

    def test_torso_and_head(self) -> None:
        """Test the keypoints the reference lengths are measured between."""
        kp = np.zeros((16, 2))
        kp[Keypoint.L_SHOULDER] = [30.0, 40.0]
        kp[Keypoint.HEAD_TOP] = [0.0, 10.0]
        kp[Keypoint.UPPER_NECK] = [0.0, 16.0]
        assert torso_width(kp) == pytest.approx(50.0)
        assert head_size(kp) == pytest.approx(6.0)


class TestPCK:
    """Test the thresholded keypoint metrics."""

    def test_identical(self, gt: Pose) -> None:
        """Test a perfect prediction."""
        assert pck(gt, gt) == 1.0
        assert pckh(gt, gt) == 1.0

    def test_one_keypoint_far(self, gt: Pose) -> None:
        """Test 15 of 16 keypoints within tolerance."""
        kp = gt.keypoints.copy()
        kp[0] += [1000.0, 0.0]
        assert pck(Pose(kp), gt) == pytest.approx(15 / 16)

    def test_monotone_in_alpha(self, rng: np.random.Generator) -> None:
        """Test that a larger tolerance never lowers the score."""
        for _ in range(50):
            truth = Pose(rng.uniform(0.0, 256.0, size=(16, 2)))
            pred = Pose(rng.uniform(0.0, 256.0, size=(16, 2)))
            assert pck(pred, truth, 0.5) >= pck(pred, truth, 0.2)
            assert pckh(pred, truth, 1.0) >= pckh(pred, truth, 0.5)

    def test_zero_torso_is_undefined(self, gt: Pose) -> None:
        """Test that coinciding shoulder and hip leave PCK undefined."""
        kp = gt.keypoints.copy()
        kp[Keypoint.R_HIP] = kp[Keypoint.L_SHOULDER]
        with pytest.raises(MetricUndefinedError) as exc_info:
            pck(gt, Pose(kp))
        assert exc_info.value.metric == "pck"


class TestDistances:
    """Test AKD, MAE, MSE and SIM."""

    def test_uniform_shift(self, gt: Pose) -> None:
        """Test a (3, 4) shift on every keypoint."""
        pred = shifted(gt, 3.0, 4.0)
        assert akd(pred, gt) == pytest.approx(5.0)
        assert mae(pred, gt) == pytest.approx(3.5)
        assert mse(pred, gt) == pytest.approx(12.5)

    def test_identical(self, gt: Pose) -> None:
        """Test zero error for identical poses."""
        assert (akd(gt, gt), mae(gt, gt), mse(gt, gt)) == (0.0, 0.0, 0.0)
        assert cos_sim(gt, gt) == pytest.approx(1.0)

    def test_akd_bounds_mae(self, rng: np.random.Generator) -> None:
        """Test AKD ≥ MAE."""
        for _ in range(50):
            a, b = rng.uniform(0.0, 256.0, size=(2, 16, 2))
            assert akd(a, b) >= mae(a, b) - 1e-12

    def test_cosine_cases(self) -> None:
        """Test orthogonal, scaled and zero vectors."""
        assert cos_sim(np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]])) == pytest.approx(0.0)
        assert cos_sim(np.array([[2.0, 2.0]]), np.array([[1.0, 1.0]])) == pytest.approx(1.0)
        assert cos_sim(np.array([[0.0, 0.0]]), np.array([[0.0, 0.0]])) == 1.0
        assert cos_sim(np.array([[0.0, 0.0]]), np.array([[3.0, 1.0]])) == 0.0


class TestIOU:
    """Test the bounding-box overlap."""

    def test_strip_overlap(self) -> None:
        """Test unit squares overlapping on a half-width strip."""
        a = np.array([[0.0, 0.0], [1.0, 1.0]])
        b = np.array([[0.5, 0.0], [1.5, 1.0]])
        assert iou(a, b) == pytest.approx(1 / 3)

    def test_identical_and_disjoint(self, gt: Pose) -> None:
        """Test the two extremes."""
        assert iou(gt, gt) == pytest.approx(1.0)
        assert iou(shifted(gt, 1000.0, 0.0), gt) == 0.0

    def test_zero_area(self, gt: Pose) -> None:
        """Test a flat box."""
        flat = gt.keypoints.copy()
        flat[:, 1] = 50.0
        with pytest.raises(MetricUndefinedError, match="zero area"):
            iou(Pose(flat), gt)

    def test_bounding_box(self) -> None:
        """Test the box corners."""
        assert bounding_box(np.array([[3.0, 9.0], [1.0, 2.0], [5.0, 4.0]])) == (1.0, 2.0, 5.0, 9.0)


class TestAgainstReference:
    """Compare with a loop-based implementation on random pairs."""

    def test_random_pairs(self, rng: np.random.Generator) -> None:
        """Test every metric to 1e-9 on a thousand pairs."""
        pairs = [tuple(rng.uniform(1.0, 256.0, size=(2, 16, 2))) for _ in range(1000)]
        report = evaluate_pairs(pairs, alpha=0.2, beta=0.5)
        for index, (pred, truth) in enumerate(pairs):
            expected = brute_force(pred, truth, 0.2, 0.5)
            for name in METRIC_COLUMNS:
                assert report.values[name][index] == pytest.approx(expected[name], abs=1e-9), name


class TestEvaluatePairs:
    """Test aggregation and undefined samples."""

    def test_perfect_predictions(self, gt: Pose) -> None:
        """Test the identity row."""
        means = evaluate_pairs([(gt, gt), (gt, gt)]).means()
        assert means["pck"] == 1.0
        assert means["akd"] == 0.0
        assert means["iou"] == pytest.approx(1.0)

    def test_undefined_samples_are_excluded(self, gt: Pose) -> None:
        """Test NaN values, exclusion counts and the undefined-metric counter."""
        flat = gt.keypoints.copy()
        flat[:, 0] = 100.0
        report = evaluate_pairs([(gt, gt), (Pose(flat), gt)])
        assert report.count == 2
        assert math.isnan(report.values["iou"][1])
        assert report.undefined["iou"] == 1
        assert report.undefined["akd"] == 0
        assert report.mean("iou") == pytest.approx(1.0)
        registry = get_metrics_manager().registry
        assert registry.get_sample_value("pose_affordance_metric_undefined_total", {"metric": "iou"}) == 1

    def test_all_undefined_mean_is_nan(self) -> None:
        """Test a metric with no defined sample."""
        point = np.zeros((16, 2))
        report = evaluate_pairs([(point, point)])
        assert math.isnan(report.mean("pck"))
        assert report.mean("akd") == 0.0

    def test_summary(self, gt: Pose) -> None:
        """Test the plain-data summary."""
        summary = summary_dict(evaluate_pairs([(gt, gt)], alpha=0.3, beta=0.6))
        assert summary["frame"] == "256x256"
        assert summary["alpha"] == 0.3
        assert summary["samples"] == 1
        assert set(summary["means"]) == set(METRIC_COLUMNS)


class TestReport:
    """Test tables and CSV files."""

    def test_table_columns_and_na(self) -> None:
        """Test column order, alignment and the n/a cell."""
        values = dict.fromkeys(METRIC_COLUMNS, 0.5)
        values["iou"] = math.nan
        table = render_table([ReportRow("mutual", values), ReportRow("none", dict.fromkeys(METRIC_COLUMNS, 0.25))])
        lines = table.splitlines()
        assert lines[0].split() == ["config", "PCK", "PCKh", "AKD", "MAE", "MSE", "SIM", "IOU"]
        assert set(lines[1]) <= {"-", " "}
        assert lines[2].split()[-1] == "n/a"
        assert lines[3].split()[1] == "0.250"
        assert len({len(line) for line in lines[:2]}) == 1

    def test_rows_from_seeds(self, gt: Pose) -> None:
        """Test mean and spread over per-seed reports."""
        reports = [evaluate_pairs([(shifted(gt, d, 0.0), gt)]) for d in (1.0, 3.0)]
        row = ReportRow.from_seeds("A", reports)
        assert row.values["akd"] == pytest.approx(2.0)
        assert row.spread["akd"] == pytest.approx(1.0)
        assert row.samples == 2
        assert "2.000±1.000" in render_table([row])

    def test_report_csv(self, gt: Pose, tmp_path) -> None:
        """Test the CSV layout with spread columns."""
        reports = [evaluate_pairs([(gt, gt)]), evaluate_pairs([(gt, gt)])]
        path = tmp_path / "out" / "ablation.csv"
        write_report_csv(path, [ReportRow.from_seeds("B", reports)])
        rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
        assert rows[0][:4] == ["config", "samples", "pck", "pck_std"]
        assert rows[1][0] == "B"
        assert rows[1][1] == "2"

    def test_samples_csv(self, gt: Pose, tmp_path) -> None:
        """Test one line per evaluated pair."""
        path = tmp_path / "samples.csv"
        write_samples_csv(path, evaluate_pairs([(gt, gt), (shifted(gt, 3.0, 4.0), gt)]))
        rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
        assert rows[0] == ["sample", *METRIC_COLUMNS]
        assert float(rows[2][3]) == pytest.approx(5.0)
