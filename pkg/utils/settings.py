"""
Process-level runtime settings read from the environment and an optional .env file.
"""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class RuntimeSettings(BaseSettings):
    """Environment driven knobs that are not part of an experiment config."""

    model_config = SettingsConfigDict(env_prefix="BESOV_MHD_", env_file=".env", extra="ignore")

    threads: int = Field(default=1, ge=1, description="Worker cap passed to scipy.fft")
    deterministic: bool = Field(default=False, description="Force sequential sweeps")
    log_level: str = Field(default="INFO", description="Root log level")
    trace_console: bool = Field(default=False, description="Export OpenTelemetry spans to stdout")
    service_name: str = Field(default="besov-mhd")
    service_version: str = Field(default="0.4.0")


@lru_cache(maxsize=1)
def get_settings() -> RuntimeSettings:
    return RuntimeSettings()


def fft_workers() -> int:
    """Number of FFT workers; one in deterministic mode."""
    settings = get_settings()
    return 1 if settings.deterministic else settings.threads
