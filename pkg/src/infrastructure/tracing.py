"""
Span tracing for seesaw runs, crossing searches and archive I/O.

Spans go through OpenTelemetry when it is installed. Console export writes to
stderr so the CLI's JSON on stdout stays parseable. Without OpenTelemetry every
span is a no-op and the numerics run unchanged.
"""
import logging
import os
import sys

logger = logging.getLogger(__name__)

CONFIGURED_FLAG = "OTEL_CONFIGURED"
SERVICE_NAME = "superactivation"


class _NullSpan:
    """Stands in for an OpenTelemetry span."""

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        return False

    def set_attribute(self, key, value):
        pass

    def record_exception(self, exception):
        pass


class _NullTracer:
    def start_as_current_span(self, name, attributes=None, **kwargs):
        return _NullSpan()


def setup_tracing(console: bool = False) -> bool:
    """
    Install an SDK tracer provider for the `superactivation` service.

    Args:
        console: Also print every finished span (seesaw.restart, archive.verify, ...) to stderr

    Returns:
        True once a provider is installed (now or by an earlier call), False if the SDK is missing.
    """
    if os.environ.get(CONFIGURED_FLAG) == "true":
        logger.debug("Tracer provider already installed")
        return True
    try:
        from opentelemetry import trace
        from opentelemetry.sdk.resources import Resource
        from opentelemetry.sdk.trace import TracerProvider
    except ImportError as e:
        logger.warning(f"OpenTelemetry SDK unavailable, spans are disabled: {e}")
        return False

    provider = TracerProvider(resource=Resource.create({"service.name": SERVICE_NAME}))
    if console:
        from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor
        provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
    trace.set_tracer_provider(provider)
    os.environ[CONFIGURED_FLAG] = "true"
    logger.info(f"Tracer provider installed for '{SERVICE_NAME}' (console export: {console})")
    return True


def get_tracer(name: str = __name__):
    """
    Tracer for one module; a null tracer if OpenTelemetry is not importable.

    Example:
        tracer = get_tracer(__name__)
        with tracer.start_as_current_span("seesaw.restart", attributes={"restart": 3}) as span:
            span.set_attribute("fidelity", result.fidelity)
    """
    try:
        from opentelemetry import trace
    except ImportError:
        return _NullTracer()
    return trace.get_tracer(name)
