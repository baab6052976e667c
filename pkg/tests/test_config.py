"""Tests for configuration management."""

from __future__ import annotations

import pytest
from pydantic import ValidationError

from pose_affordance.core.config import Settings, deep_merge, load_settings
from pose_affordance.core.config_models import AttentionMode, ContextModality, Precision
from pose_affordance.core.error_handling import ConfigurationError, NotFoundError


def test_settings_defaults():
    """Test the documented defaults."""
    settings = Settings()
    assert settings.attention.mode is AttentionMode.MUTUAL
    assert settings.attention.heads == 8
    assert settings.attention.head_dim == 64
    assert settings.attention.embed_dim == 512
    assert settings.attention.pool_size == 2
    assert settings.templates.count == 30
    assert settings.heads.latent_dim == 32
    assert settings.training.epochs == 200
    assert settings.training.batch_size == 32
    assert settings.training.learning_rate == 1e-3
    assert settings.training.beta1 == 0.5
    assert settings.training.beta2 == 0.999
    assert settings.evaluation.alpha == 0.2
    assert settings.evaluation.beta == 0.5
    assert settings.dataset.label_mode == 8
    assert settings.tensor.precision is Precision.FLOAT32


def test_settings_from_environment(monkeypatch):
    """Test nested values read from prefixed environment variables."""
    monkeypatch.setenv("POSE_AFFORDANCE_ATTENTION__MODE", "self-image")
    monkeypatch.setenv("POSE_AFFORDANCE_TEMPLATES__COUNT", "12")
    monkeypatch.setenv("POSE_AFFORDANCE_LOGGING__LEVEL", "DEBUG")

    settings = Settings()
    assert settings.attention.mode is AttentionMode.SELF_IMAGE
    assert settings.templates.count == 12
    assert settings.logging.level == "DEBUG"


def test_settings_with_otel_enabled_without_endpoint(monkeypatch):
    """Test OTEL validation when enabled without endpoint."""
    monkeypatch.setenv("POSE_AFFORDANCE_TELEMETRY__OTEL_ENABLED", "true")

    with pytest.raises(ValidationError) as exc_info:
        Settings()

    assert "OTEL endpoint must be provided" in str(exc_info.value)


def test_depth_modality_rejects_label_granularity():
    """Test that label modes other than 8 only apply to semantic maps."""
    with pytest.raises(ValidationError) as exc_info:
        Settings.model_validate({"dataset": {"modality": "depth", "label_mode": 3}})

    assert "label granularity" in str(exc_info.value)


@pytest.mark.parametrize("mode", [5, 0, 151])
def test_unknown_label_mode_rejected(mode):
    """Test that only the five granularities validate."""
    with pytest.raises(ValidationError):
        Settings.model_validate({"dataset": {"label_mode": mode}})


@pytest.mark.parametrize("pool", [0, 5])
def test_pool_size_range(pool):
    """Test the pooled-size bounds."""
    with pytest.raises(ValidationError):
        Settings.model_validate({"attention": {"pool_size": pool}})


def test_active_heads_follow_flags():
    """Test head selection under the fixed-template and unified flags."""
    assert Settings.model_validate({}).active_heads() == ["location", "classifier", "scale", "deformation"]
    assert Settings.model_validate({"heads": {"fixed_template": True}}).active_heads() == [
        "location",
        "scale",
        "deformation",
    ]
    assert Settings.model_validate({"heads": {"unified": True}}).active_heads() == [
        "location",
        "classifier",
        "unified",
    ]


def test_validate_for_head_rejects_disabled_heads():
    """Test that disabled heads raise a configuration error."""
    fixed = Settings.model_validate({"heads": {"fixed_template": True}})
    fixed.validate_for_head("all")
    fixed.validate_for_head("location")
    with pytest.raises(ConfigurationError, match="fixed_template"):
        fixed.validate_for_head("classifier")

    unified = Settings.model_validate({"heads": {"unified": True}})
    with pytest.raises(ConfigurationError, match="unified"):
        unified.validate_for_head("scale")
    with pytest.raises(ConfigurationError, match="unified is not set"):
        Settings.model_validate({}).validate_for_head("unified")


def test_deep_merge_keeps_untouched_keys():
    """Test recursive merging of nested overrides."""
    base = {"attention": {"mode": "mutual", "heads": 8}, "training": {"epochs": 5}}
    merged = deep_merge(base, {"attention": {"heads": 2}, "dataset": {"label_mode": 3}})
    assert merged == {
        "attention": {"mode": "mutual", "heads": 2},
        "training": {"epochs": 5},
        "dataset": {"label_mode": 3},
    }
    assert base["attention"]["heads"] == 8


def test_load_settings_from_toml_with_overrides(tmp_path):
    """Test that flag overrides win over the TOML file."""
    config = tmp_path / "config.toml"
    config.write_text(
        '[attention]\nmode = "cross-image-queries"\nheads = 4\n\n[dataset]\nmodality = "semantic"\nlabel_mode = 4\n',
        encoding="utf-8",
    )

    settings = load_settings(config, {"attention": {"heads": 2}})
    assert settings.attention.mode is AttentionMode.CROSS_IMAGE_QUERIES
    assert settings.attention.heads == 2
    assert settings.dataset.modality is ContextModality.SEMANTIC
    assert settings.dataset.label_mode == 4


def test_load_settings_missing_file(tmp_path):
    """Test a missing configuration file."""
    with pytest.raises(NotFoundError):
        load_settings(tmp_path / "absent.toml")
