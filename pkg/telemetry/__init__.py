"""
Tracing, metrics and console progress for besov-mhd runs.

Spans and counters go through OpenTelemetry; the console helpers live in
telemetry.console_output and are imported from there by the solvers.
"""

from .config import (
    TelemetryConfig,
    initialize_telemetry,
    get_telemetry,
    get_tracer,
    get_meter,
    get_logger
)

from .decorators import (
    trace_method,
    measure_performance,
    TelemetryContext,
    add_span_attributes,
    record_metric
)

__all__ = [
    'TelemetryConfig',
    'initialize_telemetry',
    'get_telemetry',
    'get_tracer',
    'get_meter',
    'get_logger',
    'trace_method',
    'measure_performance',
    'TelemetryContext',
    'add_span_attributes',
    'record_metric'
]
