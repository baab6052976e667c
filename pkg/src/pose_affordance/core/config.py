"""Configuration management for the pose affordance pipeline."""

from __future__ import annotations

import tomllib
from pathlib import Path
from typing import Any

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from .config_models import (
    AttentionSettings,
    BackboneSettings,
    ContextModality,
    DatasetSettings,
    EvaluationSettings,
    HeadSettings,
    LoggingSettings,
    TelemetrySettings,
    TemplateSettings,
    TensorSettings,
    TrainingSettings,
)
from .error_handling import ConfigurationError, NotFoundError


class Settings(BaseSettings):
    """Main pipeline settings."""

    model_config = SettingsConfigDict(
        env_prefix="POSE_AFFORDANCE_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        str_strip_whitespace=True,
        validate_assignment=True,
    )

    logging: LoggingSettings = Field(
        default_factory=LoggingSettings,
        description="Logging configuration",
    )

    tensor: TensorSettings = Field(
        default_factory=TensorSettings,
        description="Tensor engine settings",
    )

    backbone: BackboneSettings = Field(
        default_factory=BackboneSettings,
        description="Frozen feature extractor",
    )

    attention: AttentionSettings = Field(
        default_factory=AttentionSettings,
        description="Context block",
    )

    templates: TemplateSettings = Field(
        default_factory=TemplateSettings,
        description="Pose template bank",
    )

    heads: HeadSettings = Field(
        default_factory=HeadSettings,
        description="Generative heads",
    )

    training: TrainingSettings = Field(
        default_factory=TrainingSettings,
        description="Training loop",
    )

    evaluation: EvaluationSettings = Field(
        default_factory=EvaluationSettings,
        description="Evaluation protocol",
    )

    dataset: DatasetSettings = Field(
        default_factory=DatasetSettings,
        description="Dataset inputs",
    )

    telemetry: TelemetrySettings = Field(
        default_factory=TelemetrySettings,
        description="Telemetry and tracing",
    )

    def model_post_init(self, __context: Any) -> None:
        """Cross-field validation."""
        super().model_post_init(__context)

        if self.telemetry.otel_enabled and not self.telemetry.otel_endpoint:
            msg = "OTEL endpoint must be provided when OTEL is enabled"
            raise ValueError(msg)

        if self.dataset.modality is ContextModality.DEPTH and self.dataset.label_mode != 8:
            msg = "label granularity only applies to the semantic modality"
            raise ValueError(msg)

    def active_heads(self) -> list[str]:
        """Head kinds trained and sampled under the current flags.

        Returns
        -------
        list[str]
            Head kinds in pipeline order.

        """
        heads = ["location"]
        if not self.heads.fixed_template:
            heads.append("classifier")
        if self.heads.unified:
            heads.append("unified")
        else:
            heads.extend(["scale", "deformation"])
        return heads

    def validate_for_head(self, head: str) -> None:
        """Reject a head request that contradicts the configuration flags.

        Parameters
        ----------
        head : str
            Requested head kind, or ``"all"``.

        Raises
        ------
        ConfigurationError
            If the head is disabled by ``fixed_template`` or ``unified``.

        """
        if head == "all" or head in self.active_heads():
            return
        if head == "classifier":
            reason = "fixed_template is set, so no classifier is trained"
        elif head in {"scale", "deformation"}:
            reason = "unified is set, so scale and deformation share the unified head"
        elif head == "unified":
            reason = "unified is not set"
        else:
            reason = "unknown head"
        raise ConfigurationError(f"head '{head}' is not active: {reason}", head=head)


def deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge ``overrides`` into a copy of ``base``; overrides win."""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(
    config_file: Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> Settings:
    """Build settings from an optional TOML file plus flag overrides.

    Parameters
    ----------
    config_file : Path | None, optional
        TOML file with one table per settings section, by default None.
    overrides : dict[str, Any] | None, optional
        Nested overrides from command-line flags; they win over the file.

    Returns
    -------
    Settings
        Validated settings.

    Raises
    ------
    NotFoundError
        If ``config_file`` does not exist.

    """
    data: dict[str, Any] = {}
    if config_file is not None:
        if not config_file.is_file():
            raise NotFoundError(f"config file not found: {config_file}", path=str(config_file))
        with config_file.open("rb") as f:
            data = tomllib.load(f)
    if overrides:
        data = deep_merge(data, overrides)
    return Settings(**data)


def get_version() -> str:
    """Get the package version from pyproject.toml.

    Returns
    -------
    str
        The package version.

    """
    project_root = Path(__file__).parent.parent.parent.parent
    pyproject_path = project_root / "pyproject.toml"

    try:
        with pyproject_path.open("rb") as f:
            data = tomllib.load(f)
        return str(data["project"]["version"])
    except Exception:
        return "0.0.0"
