"""Tests for the ablation grid."""

from __future__ import annotations

import csv
import math

import pytest

from pose_affordance.ablation import AblationCell, CellJob, default_grid, run_ablation
from pose_affordance.core.config_models import AttentionMode, ContextModality
from pose_affordance.core.error_handling import InputError
from pose_affordance.core.telemetry import get_metrics_manager
from pose_affordance.evaluation import METRIC_COLUMNS

FAST = {"training": {"epochs": 1}}


def test_default_grid_layout():
    """Test every mode for both modalities plus the label and head variants."""
    labels = [cell.label for cell in default_grid()]
    assert len(labels) == len(AttentionMode) * len(ContextModality) + 6
    assert labels[0] == "none/semantic"
    assert "mutual/depth" in labels
    assert labels[-6:] == ["labels-2", "labels-3", "labels-4", "labels-150", "fixed-template", "unified"]
    assert len(set(labels)) == len(labels)


def test_cell_settings_merge(tmp_path, tiny_settings):
    """Test that cell overrides and the job seed land on the base settings."""
    cell = AblationCell("x", {"attention": {"mode": "self-image"}, "heads": {"unified": True}})
    job = CellJob(cell, 42, tiny_settings.model_dump(mode="json"), tmp_path, tmp_path / "run")
    settings = job.settings()
    assert settings.attention.mode is AttentionMode.SELF_IMAGE
    assert settings.heads.unified
    assert settings.training.seed == 42
    assert settings.attention.heads == tiny_settings.attention.heads


@pytest.mark.parametrize(("seeds", "workers"), [(0, 1), (1, 0)])
def test_rejects_empty_counts(tmp_path, tiny_settings, synth_dataset, seeds, workers):
    """Test seed and worker counts below one."""
    with pytest.raises(InputError):
        run_ablation(tiny_settings, synth_dataset, tmp_path, seeds=seeds, workers=workers, cells=[])


def test_small_grid_with_failed_cell(tmp_path, make_settings, synth_dataset):
    """Test a working cell, a failing cell and the written tables."""
    cells = [
        AblationCell("none/semantic", {"attention": {"mode": "none"}}),
        AblationCell("broken", {"backbone": {"kind": "precomputed-file"}}),
    ]
    rows = run_ablation(make_settings(FAST), synth_dataset, tmp_path, cells=cells)

    assert [row.label for row in rows] == ["none/semantic", "broken"]
    assert rows[0].samples > 0
    assert not math.isnan(rows[0].values["akd"])
    assert all(math.isnan(rows[1].values[name]) for name in METRIC_COLUMNS)
    assert (tmp_path / "cells" / "none-semantic" / "seed-0" / "settings.json").is_file()

    table = (tmp_path / "ablation.txt").read_text(encoding="utf-8").splitlines()
    assert table[0].split()[0] == "config"
    assert table[3].split()[1] == "n/a"
    with (tmp_path / "ablation.csv").open(encoding="utf-8") as f:
        assert [r[0] for r in csv.reader(f)] == ["config", "none/semantic", "broken"]

    registry = get_metrics_manager().registry
    assert registry.get_sample_value("pose_affordance_ablation_cells_total", {"status": "ok"}) == 1
    assert registry.get_sample_value("pose_affordance_ablation_cells_total", {"status": "failed"}) == 1


def test_seeds_give_spread(tmp_path, make_settings, synth_dataset):
    """Test mean and standard deviation over two training seeds."""
    cells = [AblationCell("self-image", {"attention": {"mode": "self-image"}})]
    rows = run_ablation(make_settings(FAST), synth_dataset, tmp_path, seeds=2, cells=cells)
    assert set(rows[0].spread) == set(METRIC_COLUMNS)
    assert rows[0].spread["akd"] >= 0.0
    assert (tmp_path / "cells" / "self-image" / "seed-1").is_dir()
    with (tmp_path / "ablation.csv").open(encoding="utf-8") as f:
        assert "akd_std" in next(csv.reader(f))


@pytest.mark.slow
def test_parallel_workers_match_serial(tmp_path, make_settings, synth_dataset):
    """Test that worker processes give the same rows as a serial run."""
    cells = [
        AblationCell("none/semantic", {"attention": {"mode": "none"}}),
        AblationCell("mutual/depth", {"attention": {"mode": "mutual"}, "dataset": {"modality": "depth"}}),
    ]
    serial = run_ablation(make_settings(FAST), synth_dataset, tmp_path / "serial", cells=cells)
    parallel = run_ablation(make_settings(FAST), synth_dataset, tmp_path / "parallel", workers=2, cells=cells)
    for a, b in zip(serial, parallel, strict=True):
        assert a.label == b.label
        for name in METRIC_COLUMNS:
            assert a.values[name] == pytest.approx(b.values[name], nan_ok=True)


@pytest.mark.slow
def test_full_grid(tmp_path, make_settings, synth_dataset):
    """Test that every default cell trains and evaluates."""
    rows = run_ablation(make_settings(FAST), synth_dataset, tmp_path, workers=2)
    assert len(rows) == len(default_grid())
    assert all(row.samples > 0 for row in rows)
