import pytest
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter
from opentelemetry.trace import StatusCode

import telemetry
from telemetry.console_output import (
    console_error,
    console_info,
    console_telemetry_event,
    console_warning,
    reset_telemetry_console,
)
from telemetry.decorators import TelemetryContext, measure_performance, record_metric, trace_method


@pytest.fixture
def console(monkeypatch):
    monkeypatch.setenv("BESOV_MHD_CONSOLE_ENABLED", "true")
    monkeypatch.setenv("BESOV_MHD_CONSOLE_COLORS", "false")
    monkeypatch.setenv("BESOV_MHD_CONSOLE_TIMESTAMP", "false")
    monkeypatch.delenv("BESOV_MHD_CONSOLE_LEVEL", raising=False)
    monkeypatch.delenv("BESOV_MHD_CONSOLE_MODULE", raising=False)
    reset_telemetry_console()


@pytest.fixture
def spans():
    exporter = InMemorySpanExporter()
    provider = TracerProvider()
    provider.add_span_processor(SimpleSpanProcessor(exporter))
    return provider.get_tracer("tests"), exporter


@trace_method("tests.scaled", include_args=True)
@measure_performance("tests_scaled")
def scaled(value: float, factor: float = 2.0) -> float:
    """Multiply, rejecting negative input."""
    if value < 0:
        raise ValueError("negative value")
    return value * factor


class TestDecorators:
    """Tracing and timing wrappers"""

    def test_wrapped_function_keeps_name_and_result(self):
        assert scaled.__name__ == "scaled"
        assert scaled.__doc__ == "Multiply, rejecting negative input."
        assert scaled(1.5, factor=4.0) == 6.0

    def test_exceptions_propagate(self):
        with pytest.raises(ValueError, match="negative value"):
            scaled(-1.0)

    def test_record_metric_without_provider(self):
        record_metric("tests_counter", 3)

    def test_context_marks_the_current_span(self, spans):
        tracer, exporter = spans
        with pytest.raises(RuntimeError):
            with tracer.start_as_current_span("outer"):
                with TelemetryContext(command="simulate", resolution=32):
                    raise RuntimeError("blow-up")
        (span,) = exporter.get_finished_spans()
        assert span.attributes["command"] == "simulate"
        assert span.attributes["resolution"] == 32
        assert span.attributes["error.type"] == "RuntimeError"
        assert span.status.status_code == StatusCode.ERROR

    def test_context_without_error_leaves_status(self, spans):
        tracer, exporter = spans
        with tracer.start_as_current_span("outer"):
            with TelemetryContext(dt=0.01) as context:
                assert context.attributes == {"dt": 0.01}
        (span,) = exporter.get_finished_spans()
        assert span.attributes["dt"] == 0.01
        assert span.status.status_code == StatusCode.UNSET


class TestConsole:
    """Levelled console output configured from the environment"""

    def test_info_line(self, console, capsys):
        console_info("hello", "CLI")
        assert capsys.readouterr().out == "INFO  hello\n"

    def test_module_tag(self, console, monkeypatch, capsys):
        monkeypatch.setenv("BESOV_MHD_CONSOLE_MODULE", "true")
        reset_telemetry_console()
        console_warning("careful", "CLI")
        assert capsys.readouterr().out == "WARN  [CLI] careful\n"

    def test_errors_go_to_stderr(self, console, capsys):
        console_error("broken")
        captured = capsys.readouterr()
        assert captured.out == ""
        assert captured.err == "ERROR broken\n"

    def test_level_filters_lower_levels(self, console, monkeypatch, capsys):
        monkeypatch.setenv("BESOV_MHD_CONSOLE_LEVEL", "ERROR")
        reset_telemetry_console()
        console_info("hidden")
        console_warning("hidden")
        console_error("shown")
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "shown" in captured.err

    def test_disabled_console_prints_nothing(self, console, monkeypatch, capsys):
        monkeypatch.setenv("BESOV_MHD_CONSOLE_ENABLED", "false")
        reset_telemetry_console()
        console_info("hidden")
        console_error("hidden")
        assert capsys.readouterr() == ("", "")

    def test_telemetry_event_format(self, console, capsys):
        console_telemetry_event("run_start", {"n_points": 32, "dt": 0.001, "wall_ms": 12.34}, "MHD")
        assert capsys.readouterr().out == "INFO  [RUN] RUN_START: n_points=32 dt=0.001 wall_ms=12.3ms\n"

    def test_unknown_event_tag(self, console, capsys):
        console_telemetry_event("checkpoint", {"t": 1.0 / 3.0})
        assert capsys.readouterr().out == "INFO  [EVENT] CHECKPOINT: t=0.333333\n"


class TestPackage:
    """Names re-exported by the telemetry package"""

    def test_exports_resolve(self):
        for name in telemetry.__all__:
            assert callable(getattr(telemetry, name)), name

    def test_package_docstring_names_the_console_module(self):
        assert "telemetry.console_output" in telemetry.__doc__
