"""Configuration models for the pose affordance pipeline."""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Annotated

from pydantic import BaseModel, Field, field_validator
from pydantic_settings import SettingsConfigDict


class Precision(str, Enum):
    """Floating point precision of tensors and parameters."""

    FLOAT32 = "float32"
    FLOAT64 = "float64"


class BackboneKind(str, Enum):
    """Where frozen feature maps come from."""

    BUILTIN = "builtin-frozen-cnn"
    PRECOMPUTED = "precomputed-file"


class AttentionMode(str, Enum):
    """Attention variants of the context block.

    ``cross-context-queries`` takes queries from the context map and keys/values
    from the image; ``cross-image-queries`` is the reverse.
    """

    NONE = "none"
    SELF_IMAGE = "self-image"
    SELF_CONTEXT = "self-context"
    CROSS_CONTEXT_QUERIES = "cross-context-queries"
    CROSS_IMAGE_QUERIES = "cross-image-queries"
    MUTUAL = "mutual"


class ContextModality(str, Enum):
    """Second input stream next to the scene image."""

    SEMANTIC = "semantic"
    DEPTH = "depth"


class LocationSource(str, Enum):
    """Centre used to condition the later stages during evaluation."""

    GROUND_TRUTH = "ground-truth"
    SAMPLED = "sampled"


LABEL_MODES = (2, 3, 4, 8, 150)


class LoggingSettings(BaseModel):
    """Logging configuration."""

    model_config = SettingsConfigDict(
        str_strip_whitespace=True,
        validate_assignment=True,
    )

    level: Annotated[
        str,
        Field(
            default="INFO",
            description="Logging level",
            pattern="^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$",
        ),
    ] = "INFO"

    json_output: Annotated[
        bool,
        Field(
            default=False,
            description="Force JSON log lines even on a terminal",
        ),
    ] = False


class TensorSettings(BaseModel):
    """Tensor engine settings."""

    model_config = SettingsConfigDict(validate_assignment=True)

    precision: Annotated[
        Precision,
        Field(
            default=Precision.FLOAT32,
            description="Parameter and activation precision for training runs",
        ),
    ] = Precision.FLOAT32

    debug_checks: Annotated[
        bool,
        Field(
            default=False,
            description="Raise on NaN/Inf produced by any tensor operation",
        ),
    ] = False


class BackboneSettings(BaseModel):
    """Frozen feature extractor settings."""

    model_config = SettingsConfigDict(validate_assignment=True)

    kind: Annotated[
        BackboneKind,
        Field(
            default=BackboneKind.BUILTIN,
            description="Feature source",
        ),
    ] = BackboneKind.BUILTIN

    seed: Annotated[
        int,
        Field(
            default=1234,
            description="Seed for the builtin frozen CNN weights",
            ge=0,
            le=2**64 - 1,
        ),
    ] = 1234

    feature_file: Annotated[
        Path | None,
        Field(
            default=None,
            description="AFFT1 feature file used by the precomputed backbone",
        ),
    ] = None


class AttentionSettings(BaseModel):
    """Context block settings (heads, widths, ablation mode, pooled size)."""

    model_config = SettingsConfigDict(validate_assignment=True)

    mode: Annotated[
        AttentionMode,
        Field(
            default=AttentionMode.MUTUAL,
            description="Attention variant",
        ),
    ] = AttentionMode.MUTUAL

    heads: Annotated[
        int,
        Field(default=8, description="Number of attention heads", ge=1, le=64),
    ] = 8

    head_dim: Annotated[
        int,
        Field(default=64, description="Dimension of each attention head", ge=1, le=1024),
    ] = 64

    feature_channels: Annotated[
        int,
        Field(
            default=512,
            description="Channels of the backbone feature maps",
            ge=1,
            le=4096,
        ),
    ] = 512

    pool_size: Annotated[
        int,
        Field(
            default=2,
            description="Adaptive pooling output side P; context length is channels * P * P",
            ge=1,
            le=4,
        ),
    ] = 2

    @property
    def embed_dim(self) -> int:
        """Width of the concatenated attention heads."""
        return self.heads * self.head_dim


class TemplateSettings(BaseModel):
    """Pose template bank settings."""

    model_config = SettingsConfigDict(validate_assignment=True)

    count: Annotated[
        int,
        Field(default=30, description="Number of templates m", ge=1, le=1000),
    ] = 30

    seed: Annotated[
        int,
        Field(default=0, description="Seed recorded with the bank", ge=0),
    ] = 0

    max_iterations: Annotated[
        int,
        Field(default=100, description="K-medoids iteration cap", ge=1, le=10000),
    ] = 100

    swap_refine: Annotated[
        bool,
        Field(
            default=True,
            description="Apply cost-lowering medoid swaps after the alternating iteration",
        ),
    ] = True


class HeadSettings(BaseModel):
    """Generative head widths and loss switches."""

    model_config = SettingsConfigDict(validate_assignment=True)

    shared_dim: Annotated[
        int,
        Field(default=128, description="Shared condition width", ge=1, le=4096),
    ] = 128

    hidden_dim: Annotated[
        int,
        Field(default=128, description="Hidden FC width in encoders and decoders", ge=1, le=4096),
    ] = 128

    latent_dim: Annotated[
        int,
        Field(default=32, description="Latent dimension", ge=1, le=1024),
    ] = 32

    logsigma_clamp: Annotated[
        float,
        Field(default=10.0, description="Symmetric clamp on log standard deviation", gt=0.0),
    ] = 10.0

    kl_weight: Annotated[
        float,
        Field(default=1.0, description="Weight of the KL term", ge=0.0),
    ] = 1.0

    squared_error: Annotated[
        bool,
        Field(
            default=True,
            description="Use squared L2 reconstruction error (False: plain L2 norm)",
        ),
    ] = True

    fixed_template: Annotated[
        bool,
        Field(
            default=False,
            description="Skip the classifier and always use template 0",
        ),
    ] = False

    unified: Annotated[
        bool,
        Field(
            default=False,
            description="Predict scale and deformation with one CVAE",
        ),
    ] = False


class TrainingSettings(BaseModel):
    """Optimizer and loop settings."""

    model_config = SettingsConfigDict(validate_assignment=True)

    epochs: Annotated[
        int,
        Field(default=200, description="Training epochs per head", ge=1, le=100000),
    ] = 200

    batch_size: Annotated[
        int,
        Field(default=32, description="Mini-batch size", ge=1, le=4096),
    ] = 32

    learning_rate: Annotated[
        float,
        Field(default=1e-3, description="Adam learning rate", gt=0.0),
    ] = 1e-3

    beta1: Annotated[
        float,
        Field(default=0.5, description="Adam first-moment decay", ge=0.0, lt=1.0),
    ] = 0.5

    beta2: Annotated[
        float,
        Field(default=0.999, description="Adam second-moment decay", ge=0.0, lt=1.0),
    ] = 0.999

    eps: Annotated[
        float,
        Field(default=1e-8, description="Adam denominator epsilon", gt=0.0),
    ] = 1e-8

    seed: Annotated[
        int,
        Field(default=0, description="Seed for initialisation, shuffling and noise", ge=0),
    ] = 0

    batchnorm_momentum: Annotated[
        float,
        Field(default=0.1, description="Running statistics momentum", gt=0.0, le=1.0),
    ] = 0.1

    batchnorm_eps: Annotated[
        float,
        Field(default=1e-5, description="Batch norm variance epsilon", gt=0.0),
    ] = 1e-5


class EvaluationSettings(BaseModel):
    """Metric thresholds and protocol."""

    model_config = SettingsConfigDict(validate_assignment=True)

    alpha: Annotated[
        float,
        Field(default=0.2, description="PCK tolerance factor on torso width", gt=0.0, le=1.0),
    ] = 0.2

    beta: Annotated[
        float,
        Field(default=0.5, description="PCKh tolerance factor on head size", gt=0.0, le=1.0),
    ] = 0.5

    location_source: Annotated[
        LocationSource,
        Field(
            default=LocationSource.GROUND_TRUTH,
            description="Centre conditioning the template, scale and deformation stages",
        ),
    ] = LocationSource.GROUND_TRUTH


class DatasetSettings(BaseModel):
    """Dataset inputs."""

    model_config = SettingsConfigDict(validate_assignment=True)

    modality: Annotated[
        ContextModality,
        Field(default=ContextModality.SEMANTIC, description="Context map modality"),
    ] = ContextModality.SEMANTIC

    label_mode: Annotated[
        int,
        Field(default=8, description="Semantic label granularity"),
    ] = 8

    label_mapping_file: Annotated[
        Path | None,
        Field(
            default=None,
            description="JSON table mapping raw label ids to palette categories",
        ),
    ] = None

    @field_validator("label_mode")
    @classmethod
    def _check_label_mode(cls, value: int) -> int:
        if value not in LABEL_MODES:
            msg = f"label_mode must be one of {LABEL_MODES}, got {value}"
            raise ValueError(msg)
        return value


class TelemetrySettings(BaseModel):
    """Training telemetry and tracing."""

    model_config = SettingsConfigDict(validate_assignment=True)

    metrics_textfile: Annotated[
        Path | None,
        Field(
            default=None,
            description="Write Prometheus metrics to this textfile after each run",
        ),
    ] = None

    otel_enabled: Annotated[
        bool,
        Field(default=False, description="Export OpenTelemetry traces"),
    ] = False

    otel_endpoint: Annotated[
        str | None,
        Field(
            default=None,
            description="OpenTelemetry collector endpoint",
            examples=["http://localhost:4317"],
        ),
    ] = None

    service_name: Annotated[
        str,
        Field(default="pose-affordance", description="Service name for traces"),
    ] = "pose-affordance"

    sampling_rate: Annotated[
        float,
        Field(default=1.0, description="Trace sampling rate (0.0-1.0)", ge=0.0, le=1.0),
    ] = 1.0
