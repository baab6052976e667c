"""Tests for the command-line interface."""

from __future__ import annotations

import csv
import json
import shutil

import pytest

from pose_affordance.cli import build_parser, main
from pose_affordance.dataset import read_manifest
from pose_affordance.templates import TemplateBank

TINY_TOML = """
[tensor]
precision = "float64"

[attention]
heads = 2
head_dim = 4
feature_channels = 8

[heads]
shared_dim = 8
hidden_dim = 8
latent_dim = 4

[templates]
count = 2
max_iterations = 20

[training]
epochs = 1
batch_size = 8
"""


@pytest.fixture
def tiny_config(tmp_path):
    """TOML file with tiny network widths."""
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML, encoding="utf-8")
    return path


def error_lines(err: str) -> list[str]:
    return [line for line in err.splitlines() if line.startswith("E_")]


def test_parser_requires_command():
    """Test that a sub-command is mandatory."""
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_synth(tmp_path, capsys):
    """Test dataset generation."""
    out = tmp_path / "data"
    assert main(["--log-level", "ERROR", "synth", "--out", str(out), "--count", "3", "--seed", "1"]) == 0
    assert "3 scenes" in capsys.readouterr().out
    assert len(read_manifest(out / "manifest.jsonl")) == 3


def test_synth_rejects_zero_scenes(tmp_path, capsys):
    """Test an input error exit."""
    assert main(["--log-level", "ERROR", "synth", "--out", str(tmp_path), "--count", "0"]) == 1
    assert error_lines(capsys.readouterr().err)[0].startswith("E_INPUT:")


def test_make_templates(tmp_path, synth_dataset, tiny_config, capsys):
    """Test writing a template bank."""
    out = tmp_path / "bank.json"
    args = ["--config", str(tiny_config), "--log-level", "ERROR", "make-templates"]
    assert main([*args, "--dataset", str(synth_dataset), "--out", str(out), "--templates", "3"]) == 0
    assert TemplateBank.load(out).m == 3
    assert "3 templates" in capsys.readouterr().out


def test_train_single_head(tmp_path, synth_dataset, tiny_config, capsys):
    """Test training one head by its alias."""
    run = tmp_path / "run"
    argv = ["--config", str(tiny_config), "--log-level", "ERROR", "train"]
    assert main([*argv, "--dataset", str(synth_dataset), "--out", str(run), "--head", "deform"]) == 0
    assert (run / "checkpoints" / "deformation.aflb").is_file()
    assert "deformation: loss" in capsys.readouterr().out


def test_invalid_label_mode_is_configuration_error(tmp_path, synth_dataset, capsys):
    """Test exit status 2 for a rejected setting."""
    argv = ["train", "--dataset", str(synth_dataset), "--out", str(tmp_path), "--labels", "5"]
    assert main(argv) == 2
    line = error_lines(capsys.readouterr().err)[0]
    assert line.startswith("E_CONFIGURATION:")
    assert "label_mode" in line


def test_disabled_head_is_configuration_error(tmp_path, synth_dataset, tiny_config, capsys):
    """Test training the classifier under a fixed template."""
    argv = ["--config", str(tiny_config), "--log-level", "ERROR", "train", "--dataset", str(synth_dataset)]
    assert main([*argv, "--out", str(tmp_path), "--head", "classifier", "--fixed-template"]) == 2
    assert error_lines(capsys.readouterr().err)[0].startswith("E_CONFIGURATION:")


def test_missing_config_file(tmp_path, capsys):
    """Test a config path that does not exist."""
    assert main(["--config", str(tmp_path / "absent.toml"), "synth", "--out", str(tmp_path)]) == 2
    assert error_lines(capsys.readouterr().err)[0].startswith("E_NOT_FOUND:")


def test_sample_to_stdout(trained_run, synth_dataset, capsys):
    """Test sampled poses as JSON on stdout."""
    argv = ["--log-level", "ERROR", "sample", "--run", str(trained_run), "--dataset", str(synth_dataset)]
    assert main([*argv, "--scene", "0001", "--count", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["scene"] == "0001"
    assert len(payload["samples"]) == 2


def test_sample_untrained_run(tmp_path, synth_dataset, capsys):
    """Test a state error for a directory without a run."""
    argv = ["--log-level", "ERROR", "sample", "--run", str(tmp_path), "--dataset", str(synth_dataset)]
    assert main([*argv, "--scene", "0001"]) == 1
    assert error_lines(capsys.readouterr().err)[0].startswith("E_STATE:")


def test_sample_unknown_scene(trained_run, synth_dataset, capsys):
    """Test a scene id that is not in the manifest."""
    argv = ["--log-level", "ERROR", "sample", "--run", str(trained_run), "--dataset", str(synth_dataset)]
    assert main([*argv, "--scene", "nope"]) == 1
    assert error_lines(capsys.readouterr().err)[0].startswith("E_NOT_FOUND:")


def test_sample_then_render(tmp_path, trained_run, synth_dataset):
    """Test drawing a sample file over its scene."""
    samples = tmp_path / "samples.json"
    overlay = tmp_path / "overlay.png"
    common = ["--dataset", str(synth_dataset), "--scene", "0002"]
    assert main(["--log-level", "ERROR", "sample", "--run", str(trained_run), *common, "--out", str(samples)]) == 0
    assert main(["--log-level", "ERROR", "render", *common, "--samples", str(samples), "--out", str(overlay)]) == 0
    assert overlay.is_file()


def test_render_bad_sample_file(tmp_path, synth_dataset, capsys):
    """Test a JSON file that is not a sample file."""
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"poses": []}), encoding="utf-8")
    argv = ["--log-level", "ERROR", "render", "--dataset", str(synth_dataset), "--scene", "0000"]
    assert main([*argv, "--samples", str(bad), "--out", str(tmp_path / "x.png")]) == 1
    assert error_lines(capsys.readouterr().err)[0].startswith("E_FORMAT:")


@pytest.mark.parametrize(
    "keypoints",
    [[["a", "b"]] * 16, [[1.0, 2.0], [3.0]] * 8],
    ids=["non-numeric", "ragged"],
)
def test_render_malformed_keypoints(tmp_path, synth_dataset, capsys, keypoints):
    """Test sample keypoints that do not form a numeric array."""
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"samples": [{"keypoints": keypoints}]}), encoding="utf-8")
    argv = ["--log-level", "ERROR", "render", "--dataset", str(synth_dataset), "--scene", "0000"]
    assert main([*argv, "--samples", str(bad), "--out", str(tmp_path / "x.png")]) == 1
    err = capsys.readouterr().err
    assert len(error_lines(err)) == 1
    assert error_lines(err)[0].startswith("E_FORMAT:")
    assert "Traceback" not in err


def test_render_ragged_pose_file(tmp_path, synth_dataset, capsys):
    """Test a dataset whose pose file holds a ragged keypoint list."""
    broken = tmp_path / "broken"
    shutil.copytree(synth_dataset, broken)
    entry = read_manifest(broken / "manifest.jsonl")[0]
    (broken / entry.poses).write_text(json.dumps([[[1.0, 2.0, 1.0], [3.0, 4.0]]]), encoding="utf-8")
    argv = ["--log-level", "ERROR", "render", "--dataset", str(broken), "--scene", entry.id]
    assert main([*argv, "--out", str(tmp_path / "x.png")]) == 1
    err = capsys.readouterr().err
    assert len(error_lines(err)) == 1
    assert error_lines(err)[0].startswith("E_FORMAT:")


def test_eval_writes_report(tmp_path, trained_run, synth_dataset, capsys):
    """Test the report directory and the printed table."""
    out = tmp_path / "report"
    argv = ["--log-level", "ERROR", "eval", "--run", str(trained_run), "--dataset", str(synth_dataset)]
    assert main([*argv, "--count", "3", "--out", str(out)]) == 0
    assert capsys.readouterr().out.splitlines()[0].split()[:2] == ["run", "PCK"]
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["location_source"] == "ground-truth"
    assert summary["frame"] == "256x256"
    assert 0.0 <= summary["location_feasibility"] <= 1.0
    with (out / "samples.csv").open(encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert len(rows) == 1 + summary["samples"]
    assert (out / "report.txt").is_file()


def test_distribution(tmp_path, trained_run, synth_dataset, capsys):
    """Test one heatmap per template class."""
    out = tmp_path / "heat"
    argv = ["--log-level", "ERROR", "distribution", "--run", str(trained_run), "--dataset", str(synth_dataset)]
    assert main([*argv, "--scene", "0000", "--count", "20", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["class-0.png", "class-1.png"]
    assert "2 heatmaps" in capsys.readouterr().out


def test_metrics_textfile(tmp_path, capsys):
    """Test writing Prometheus metrics on exit."""
    metrics = tmp_path / "metrics.prom"
    argv = ["--log-level", "ERROR", "--metrics-textfile", str(metrics), "synth", "--out", str(tmp_path / "d")]
    assert main([*argv, "--count", "1"]) == 0
    assert "pose_affordance_scenes_generated_total 1.0" in metrics.read_text(encoding="utf-8")
