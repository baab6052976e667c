"""Prometheus telemetry for training, sampling and dataset runs."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

import psutil
from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

from .constants import MetricLabels, MetricNames
from .logging import get_logger

if TYPE_CHECKING:
    from pathlib import Path

logger = get_logger(__name__)

EPOCH_DURATION_BUCKETS = (0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 30.0, 60.0, 300.0)


class MetricsManager:
    """Creates metrics on a private registry and dumps them to a textfile."""

    def __init__(
        self,
        namespace: str = "pose_affordance",
        registry: CollectorRegistry | None = None,
    ) -> None:
        """Initialize metrics manager.

        Parameters
        ----------
        namespace : str, optional
            Metric namespace prefix, by default "pose_affordance".
        registry : CollectorRegistry | None, optional
            Registry to attach metrics to; a fresh one if None.

        """
        self.namespace = namespace
        self.registry = registry or CollectorRegistry()
        self._metrics: dict[str, Any] = {}

        logger.debug("Initialized MetricsManager", namespace=namespace)

    def _full_name(self, name: str | MetricNames) -> str:
        value = name.value if isinstance(name, MetricNames) else name
        return f"{self.namespace}_{value}"

    def create_gauge(
        self,
        name: str | MetricNames,
        description: str,
        labels: list[str] | None = None,
    ) -> Gauge:
        """Create (or fetch) a gauge metric.

        Parameters
        ----------
        name : str | MetricNames
            Metric name.
        description : str
            Metric description.
        labels : list[str] | None, optional
            Label names, by default None.

        Returns
        -------
        Gauge
            Prometheus gauge metric.

        """
        full_name = self._full_name(name)
        if full_name not in self._metrics:
            self._metrics[full_name] = Gauge(
                full_name,
                description,
                labelnames=labels or [],
                registry=self.registry,
            )
            logger.debug("Created gauge metric", name=full_name, labels=labels)
        return self._metrics[full_name]

    def create_counter(
        self,
        name: str | MetricNames,
        description: str,
        labels: list[str] | None = None,
    ) -> Counter:
        """Create (or fetch) a counter metric.

        Parameters
        ----------
        name : str | MetricNames
            Metric name; prometheus_client appends ``_total`` on exposition.
        description : str
            Metric description.
        labels : list[str] | None, optional
            Label names, by default None.

        Returns
        -------
        Counter
            Prometheus counter metric.

        """
        full_name = self._full_name(name)
        if full_name not in self._metrics:
            self._metrics[full_name] = Counter(
                full_name,
                description,
                labelnames=labels or [],
                registry=self.registry,
            )
            logger.debug("Created counter metric", name=full_name, labels=labels)
        return self._metrics[full_name]

    def create_histogram(
        self,
        name: str | MetricNames,
        description: str,
        labels: list[str] | None = None,
        buckets: tuple[float, ...] | None = None,
    ) -> Histogram:
        """Create (or fetch) a histogram metric.

        Parameters
        ----------
        name : str | MetricNames
            Metric name.
        description : str
            Metric description.
        labels : list[str] | None, optional
            Label names, by default None.
        buckets : tuple[float, ...] | None, optional
            Histogram buckets, by default the prometheus_client defaults.

        Returns
        -------
        Histogram
            Prometheus histogram metric.

        """
        full_name = self._full_name(name)
        if full_name not in self._metrics:
            self._metrics[full_name] = Histogram(
                full_name,
                description,
                labelnames=labels or [],
                buckets=buckets or Histogram.DEFAULT_BUCKETS,
                registry=self.registry,
            )
            logger.debug("Created histogram metric", name=full_name, labels=labels)
        return self._metrics[full_name]

    def get_metric(self, name: str | MetricNames) -> Any:
        """Get a metric by name, or None if it was never created."""
        return self._metrics.get(self._full_name(name))

    def record_memory(self) -> int:
        """Set the resident-memory gauge from the current process.

        Returns
        -------
        int
            Resident set size in bytes.

        """
        rss = int(psutil.Process().memory_info().rss)
        self.create_gauge(
            MetricNames.PROCESS_RESIDENT_MEMORY_BYTES,
            "Resident memory of the pipeline process",
        ).set(rss)
        return rss

    def write_textfile(self, path: Path) -> None:
        """Write all metrics in the node-exporter textfile format.

        Parameters
        ----------
        path : Path
            Destination file; parent directories are created.

        """
        self.record_memory()
        path.parent.mkdir(parents=True, exist_ok=True)
        write_to_textfile(str(path), self.registry)
        logger.info("Wrote metrics textfile", path=str(path))


metrics_manager = MetricsManager()


def reset_metrics_manager() -> MetricsManager:
    """Replace the global manager with one bound to a fresh registry.

    Returns
    -------
    MetricsManager
        The new global manager.

    """
    global metrics_manager
    metrics_manager = MetricsManager()
    return metrics_manager


def get_metrics_manager() -> MetricsManager:
    """Return the current global metrics manager."""
    return metrics_manager


def training_loss_gauge() -> Gauge:
    """Gauge of the latest epoch mean loss per head and component."""
    return metrics_manager.create_gauge(
        MetricNames.TRAINING_LOSS,
        "Mean loss of the latest training epoch",
        labels=[MetricLabels.HEAD.value, MetricLabels.COMPONENT.value],
    )


def training_steps_counter() -> Counter:
    """Counter of optimizer steps per head."""
    return metrics_manager.create_counter(
        MetricNames.TRAINING_STEPS_TOTAL.value.removesuffix("_total"),
        "Optimizer steps taken",
        labels=[MetricLabels.HEAD.value],
    )


def epoch_duration_histogram() -> Histogram:
    """Histogram of wall-clock epoch durations per head."""
    return metrics_manager.create_histogram(
        MetricNames.EPOCH_DURATION_SECONDS,
        "Wall-clock time per training epoch",
        labels=[MetricLabels.HEAD.value],
        buckets=EPOCH_DURATION_BUCKETS,
    )


def checkpoints_written_counter() -> Counter:
    """Counter of checkpoint files written per head."""
    return metrics_manager.create_counter(
        MetricNames.CHECKPOINTS_WRITTEN_TOTAL.value.removesuffix("_total"),
        "Checkpoint files written",
        labels=[MetricLabels.HEAD.value],
    )


def samples_generated_counter() -> Counter:
    """Counter of poses produced by the sampler."""
    return metrics_manager.create_counter(
        MetricNames.SAMPLES_GENERATED_TOTAL.value.removesuffix("_total"),
        "Poses produced by the full sampling pipeline",
    )


def scenes_generated_counter() -> Counter:
    """Counter of synthetic scenes written."""
    return metrics_manager.create_counter(
        MetricNames.SCENES_GENERATED_TOTAL.value.removesuffix("_total"),
        "Synthetic scenes written",
    )


def unmapped_label_counter() -> Counter:
    """Counter of raw label pixels that fell back to background."""
    return metrics_manager.create_counter(
        MetricNames.UNMAPPED_LABEL_PIXELS_TOTAL.value.removesuffix("_total"),
        "Raw label pixels without a category mapping",
    )


def metric_undefined_counter() -> Counter:
    """Counter of samples excluded from a metric mean."""
    return metrics_manager.create_counter(
        MetricNames.METRIC_UNDEFINED_TOTAL.value.removesuffix("_total"),
        "Samples for which a metric was undefined",
        labels=[MetricLabels.METRIC.value],
    )


def ablation_cells_counter() -> Counter:
    """Counter of finished ablation cells by outcome."""
    return metrics_manager.create_counter(
        MetricNames.ABLATION_CELLS_TOTAL.value.removesuffix("_total"),
        "Ablation grid cells run",
        labels=[MetricLabels.STATUS.value],
    )
