"""
Exception hierarchy for besov-mhd.

Precondition failures are ValueError subclasses so callers that only know the
standard library still catch them. Physical blow-up is a RuntimeError and
carries the last finite state.
"""

from typing import Any, Optional


class BesovMHDError(Exception):
    """Base class for every error raised by this package."""


class GridError(BesovMHDError, ValueError):
    """Invalid grid, mismatched grids, or an out-of-range norm index."""


class NonSolenoidalError(BesovMHDError, ValueError):
    """A velocity field that must be divergence-free is not."""


class UndefinedRatioError(BesovMHDError, ArithmeticError):
    """A measured ratio has a zero denominator."""


class ConfigError(BesovMHDError, ValueError):
    """Experiment configuration could not be parsed or validated."""


class SnapshotFormatError(BesovMHDError, ValueError):
    """A snapshot file does not follow the BMHD1 layout."""


class BlowUpError(BesovMHDError, RuntimeError):
    """
    Raised by the time stepper when a field stops being finite.

    Args:
        message: Human readable reason
        last_state: Last state whose fields were all finite
        time: Time at which the non-finite state was produced
    """

    def __init__(self, message: str, last_state: Any = None, time: Optional[float] = None):
        super().__init__(message)
        self.last_state = last_state
        self.time = time


class PicardFailure(BesovMHDError, RuntimeError):
    """A linear solve inside the Picard scheme blew up."""

    def __init__(self, message: str, iterate: int, time: Optional[float] = None):
        super().__init__(f"iterate {iterate}: {message}")
        self.iterate = iterate
        self.time = time
