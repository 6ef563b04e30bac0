"""
Telemetry decorators for experiment-level operations
"""

import functools
import time
from typing import Any, Callable, Dict, Optional, Tuple

from opentelemetry import trace
from opentelemetry.trace import Status, StatusCode

from .config import get_logger, get_meter, get_tracer

_instruments: Dict[Tuple[str, str], Any] = {}


def _histogram(name: str, description: str) -> Any:
    key = ("histogram", name)
    if key not in _instruments:
        _instruments[key] = get_meter().create_histogram(name=name, description=description, unit="ms")
    return _instruments[key]


def _counter(name: str) -> Any:
    key = ("counter", name)
    if key not in _instruments:
        _instruments[key] = get_meter().create_counter(name=name, description=f"Custom metric: {name}", unit="1")
    return _instruments[key]


def _attribute_value(value: Any) -> Any:
    if isinstance(value, (str, bool, int, float)):
        return value
    return str(value)[:100]


def trace_method(operation_name: Optional[str] = None,
                 include_args: bool = False,
                 include_result: bool = False) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """
    Decorator to trace a call with an OpenTelemetry span.

    Args:
        operation_name: Span name (defaults to module.function)
        include_args: Record positional and keyword arguments as attributes
        include_result: Record the result type and scalar results
    """
    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            tracer = get_tracer()
            span_name = operation_name or f"{func.__module__}.{func.__name__}"

            with tracer.start_as_current_span(span_name) as span:
                span.set_attribute("function.name", func.__name__)
                span.set_attribute("function.module", func.__module__)

                if include_args:
                    for i, arg in enumerate(args):
                        if i == 0 and hasattr(arg, func.__name__):
                            span.set_attribute("method.class", arg.__class__.__name__)
                        else:
                            span.set_attribute(f"args.{i}", _attribute_value(arg))
                    for key, value in kwargs.items():
                        span.set_attribute(f"kwargs.{key}", _attribute_value(value))

                try:
                    result = func(*args, **kwargs)

                    if include_result and result is not None:
                        span.set_attribute("result.type", type(result).__name__)
                        if isinstance(result, (str, int, float, bool)):
                            span.set_attribute("result.value", result)

                    span.set_status(Status(StatusCode.OK))
                    return result

                except Exception as e:
                    span.set_status(Status(StatusCode.ERROR, str(e)))
                    span.set_attribute("error.type", type(e).__name__)
                    span.set_attribute("error.message", str(e))
                    raise

        return wrapper
    return decorator


def measure_performance(metric_name: str,
                        additional_attributes: Optional[Dict[str, str]] = None
                        ) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """
    Decorator recording a `<metric_name>_duration_ms` histogram and a log line.

    Args:
        metric_name: Prefix of the histogram name
        additional_attributes: Extra attributes attached to every sample
    """
    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            logger = get_logger(func.__module__)
            histogram = _histogram(f"{metric_name}_duration_ms", f"Duration of {func.__name__} operations")
            attributes = {"operation": func.__name__}
            if additional_attributes:
                attributes.update(additional_attributes)

            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                duration_ms = (time.perf_counter() - start_time) * 1000
                histogram.record(duration_ms, {**attributes, "status": "error"})
                logger.error(f"{func.__name__} failed after {duration_ms:.2f}ms: {e}")
                raise

            duration_ms = (time.perf_counter() - start_time) * 1000
            histogram.record(duration_ms, {**attributes, "status": "success"})
            logger.info(f"{func.__name__} completed in {duration_ms:.2f}ms")
            return result

        return wrapper
    return decorator


class TelemetryContext:
    """Context manager adding attributes to the current span and marking errors."""

    def __init__(self, **attributes: Any):
        self.attributes = attributes

    def __enter__(self) -> "TelemetryContext":
        add_span_attributes(**self.attributes)
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        if exc_type:
            current_span = trace.get_current_span()
            if current_span and current_span.is_recording():
                current_span.set_status(Status(StatusCode.ERROR, str(exc_val)))
                current_span.set_attribute("error.type", exc_type.__name__)
                current_span.set_attribute("error.message", str(exc_val))


def add_span_attributes(**attributes: Any) -> None:
    """Add attributes to the current span."""
    current_span = trace.get_current_span()
    if current_span and current_span.is_recording():
        for key, value in attributes.items():
            current_span.set_attribute(key, _attribute_value(value))


def record_metric(name: str, value: float, attributes: Optional[Dict[str, str]] = None) -> None:
    """Add value to a named counter."""
    _counter(name).add(value, attributes or {})
