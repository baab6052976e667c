"""Telemetry metric name and label constants."""

from __future__ import annotations

from enum import Enum


class MetricNames(str, Enum):
    """Prometheus metric names (without the namespace prefix)."""

    # Training metrics
    TRAINING_LOSS = "training_loss"
    TRAINING_STEPS_TOTAL = "training_steps_total"
    EPOCH_DURATION_SECONDS = "epoch_duration_seconds"
    CHECKPOINTS_WRITTEN_TOTAL = "checkpoints_written_total"

    # Inference metrics
    SAMPLES_GENERATED_TOTAL = "samples_generated_total"

    # Dataset metrics
    SCENES_GENERATED_TOTAL = "scenes_generated_total"
    UNMAPPED_LABEL_PIXELS_TOTAL = "unmapped_label_pixels_total"

    # Evaluation metrics
    METRIC_UNDEFINED_TOTAL = "metric_undefined_total"

    # Ablation metrics
    ABLATION_CELLS_TOTAL = "ablation_cells_total"

    # Process metrics
    PROCESS_RESIDENT_MEMORY_BYTES = "process_resident_memory_bytes"


class MetricLabels(str, Enum):
    """Prometheus label names."""

    HEAD = "head"
    COMPONENT = "component"
    METRIC = "metric"
    STATUS = "status"


class LossComponents(str, Enum):
    """Loss components reported per training epoch."""

    TOTAL = "total"
    RECONSTRUCTION = "mse_or_cce"
    KLD = "kld"
