"""
OpenTelemetry and logging configuration for besov-mhd

Spans wrap whole experiments (runs, Picard sweeps, lifespan reports), never
individual time steps.
"""

import logging
from typing import Optional

from opentelemetry import metrics, trace
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.resources import SERVICE_NAME, SERVICE_VERSION, Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor


class TelemetryConfig:
    """
    Installs tracer and meter providers with a service resource and sets up
    application logging.
    """

    def __init__(self,
                 service_name: str = "besov-mhd",
                 service_version: str = "0.4.0",
                 log_level: int = logging.INFO,
                 export_spans: bool = False):
        """
        Args:
            service_name: Name recorded on every span
            service_version: Version recorded on every span
            log_level: Root logging level
            export_spans: Print finished spans to stdout
        """
        self.service_name = service_name
        self.service_version = service_version
        self.log_level = log_level
        self.export_spans = export_spans
        self.is_configured = False

    def configure(self) -> bool:
        """
        Returns:
            bool: True if the providers were installed
        """
        try:
            resource = Resource.create({SERVICE_NAME: self.service_name, SERVICE_VERSION: self.service_version})
            tracer_provider = TracerProvider(resource=resource)
            if self.export_spans:
                tracer_provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter()))
            trace.set_tracer_provider(tracer_provider)
            metrics.set_meter_provider(MeterProvider(resource=resource))

            self._configure_application_logging()
            self.is_configured = True
            return True
        except Exception as e:
            logging.getLogger(__name__).warning(f"Telemetry configuration failed, continuing without it: {e}")
            return False

    def _configure_application_logging(self) -> None:
        logging.basicConfig(
            level=self.log_level,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            force=True
        )

        logging.getLogger('opentelemetry').setLevel(logging.WARNING)
        logging.getLogger('matplotlib').setLevel(logging.WARNING)

    def get_tracer(self, name: Optional[str] = None) -> trace.Tracer:
        return trace.get_tracer(name or self.service_name)

    def get_meter(self, name: Optional[str] = None) -> metrics.Meter:
        return metrics.get_meter(name or self.service_name)

    def get_logger(self, name: Optional[str] = None) -> logging.Logger:
        return logging.getLogger(name or self.service_name)


_telemetry_config: Optional[TelemetryConfig] = None


def initialize_telemetry(service_name: str = "besov-mhd",
                         service_version: str = "0.4.0",
                         log_level: int = logging.INFO,
                         export_spans: bool = False) -> bool:
    """
    Initialize telemetry once per process; later calls report the first result.
    """
    global _telemetry_config

    if _telemetry_config is not None:
        return _telemetry_config.is_configured

    _telemetry_config = TelemetryConfig(service_name, service_version, log_level, export_spans)
    return _telemetry_config.configure()


def get_telemetry() -> Optional[TelemetryConfig]:
    return _telemetry_config


def get_tracer(name: Optional[str] = None) -> trace.Tracer:
    if _telemetry_config:
        return _telemetry_config.get_tracer(name)
    return trace.get_tracer(name or "besov-mhd")


def get_meter(name: Optional[str] = None) -> metrics.Meter:
    if _telemetry_config:
        return _telemetry_config.get_meter(name)
    return metrics.get_meter(name or "besov-mhd")


def get_logger(name: Optional[str] = None) -> logging.Logger:
    if _telemetry_config:
        return _telemetry_config.get_logger(name)
    return logging.getLogger(name or "besov-mhd")
