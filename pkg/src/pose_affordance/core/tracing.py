"""OpenTelemetry tracing setup."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

from opentelemetry import trace

from .logging import get_logger

if TYPE_CHECKING:
    from .config_models import TelemetrySettings

logger = get_logger(__name__)

_provider: Any = None


def setup_tracing(settings: TelemetrySettings, version: str = "0.0.0") -> bool:
    """Install an SDK tracer provider exporting over OTLP.

    Parameters
    ----------
    settings : TelemetrySettings
        Telemetry section of the pipeline settings.
    version : str, optional
        Service version attribute, by default "0.0.0".

    Returns
    -------
    bool
        True if a provider was installed, False when tracing is disabled.

    """
    global _provider
    if not settings.otel_enabled:
        logger.debug("Tracing disabled")
        return False
    if _provider is not None:
        return True

    from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
    from opentelemetry.sdk.resources import Resource
    from opentelemetry.sdk.trace import TracerProvider
    from opentelemetry.sdk.trace.export import BatchSpanProcessor
    from opentelemetry.sdk.trace.sampling import TraceIdRatioBased

    resource = Resource.create(
        {
            "service.name": settings.service_name,
            "service.version": version,
        }
    )
    provider = TracerProvider(
        resource=resource,
        sampler=TraceIdRatioBased(settings.sampling_rate),
    )
    provider.add_span_processor(
        BatchSpanProcessor(OTLPSpanExporter(endpoint=settings.otel_endpoint, insecure=True))
    )
    trace.set_tracer_provider(provider)
    _provider = provider
    logger.info(
        "Tracing enabled",
        endpoint=settings.otel_endpoint,
        sampling_rate=settings.sampling_rate,
    )
    return True


def shutdown_tracing() -> None:
    """Flush and stop the installed provider, if any."""
    global _provider
    if _provider is not None:
        _provider.shutdown()
        _provider = None


def get_tracer(name: str) -> trace.Tracer:
    """Get a tracer; spans are no-ops until ``setup_tracing`` installs a provider."""
    return trace.get_tracer(name)
