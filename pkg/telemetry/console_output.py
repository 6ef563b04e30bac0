"""
Console output for run progress and experiment events

Configured through BESOV_MHD_CONSOLE_* environment variables so library code
can report progress without knowing where it runs.
"""

import os
import sys
from datetime import datetime
from enum import Enum
from typing import Any, Dict, Optional

from colorama import Fore, Style


class ConsoleLevel(Enum):
    """Console output levels"""
    DISABLED = 0
    ERROR = 1
    WARNING = 2
    INFO = 3
    DEBUG = 4


class TelemetryConsole:
    """
    Levelled console printer configured from the environment.
    """

    def __init__(self) -> None:
        console_level = os.getenv('BESOV_MHD_CONSOLE_LEVEL', 'INFO').upper()
        self.enabled = os.getenv('BESOV_MHD_CONSOLE_ENABLED', 'true').lower() == 'true'
        self.use_colors = os.getenv('BESOV_MHD_CONSOLE_COLORS', 'true').lower() == 'true' and sys.stdout.isatty()
        self.include_timestamp = os.getenv('BESOV_MHD_CONSOLE_TIMESTAMP', 'true').lower() == 'true'
        self.include_module = os.getenv('BESOV_MHD_CONSOLE_MODULE', 'false').lower() == 'true'

        try:
            self.level = ConsoleLevel[console_level]
        except KeyError:
            self.level = ConsoleLevel.INFO

        self.level_colors = {
            'ERROR': Fore.RED,
            'WARN': Fore.YELLOW,
            'INFO': Fore.GREEN,
            'DEBUG': Fore.BLUE,
        }

    def _paint(self, text: str, color: str) -> str:
        if not self.use_colors or not color:
            return text
        return f"{color}{text}{Style.RESET_ALL}"

    def _should_print(self, level: ConsoleLevel) -> bool:
        return self.enabled and level.value <= self.level.value

    def _format_message(self, level: str, message: str, module: Optional[str] = None) -> str:
        parts = []

        if self.include_timestamp:
            timestamp = datetime.now().strftime('%H:%M:%S.%f')[:-3]
            parts.append(self._paint(f"[{timestamp}]", Style.DIM))

        parts.append(self._paint(f"{level:5}", self.level_colors.get(level, '')))

        if self.include_module and module:
            parts.append(self._paint(f"[{module}]", Style.DIM))

        parts.append(message)
        return ' '.join(parts)

    def error(self, message: str, module: Optional[str] = None) -> None:
        if self._should_print(ConsoleLevel.ERROR):
            print(self._format_message('ERROR', message, module), file=sys.stderr)

    def warning(self, message: str, module: Optional[str] = None) -> None:
        if self._should_print(ConsoleLevel.WARNING):
            print(self._format_message('WARN', message, module))

    def info(self, message: str, module: Optional[str] = None) -> None:
        if self._should_print(ConsoleLevel.INFO):
            print(self._format_message('INFO', message, module))

    def debug(self, message: str, module: Optional[str] = None) -> None:
        if self._should_print(ConsoleLevel.DEBUG):
            print(self._format_message('DEBUG', message, module))

    def telemetry_event(self, event_type: str, details: Dict[str, Any], module: Optional[str] = None) -> None:
        """Print a structured event as key=value pairs"""
        if not self._should_print(ConsoleLevel.INFO):
            return

        detail_parts = []
        for key, value in details.items():
            if isinstance(value, float):
                if key.endswith('_ms'):
                    detail_parts.append(f"{key}={value:.1f}ms")
                else:
                    detail_parts.append(f"{key}={value:.6g}")
            else:
                detail_parts.append(f"{key}={value}")

        tags = {
            'run_start': '[RUN]',
            'run_end': '[END]',
            'blow_up': '[BLOWUP]',
            'check_pass': '[PASS]',
            'check_fail': '[FAIL]',
            'report': '[REPORT]',
        }

        tag = tags.get(event_type, '[EVENT]')
        message = f"{tag} {event_type.upper()}: {' '.join(detail_parts)}"
        print(self._format_message('INFO', message, module))


_console: Optional[TelemetryConsole] = None


def get_telemetry_console() -> TelemetryConsole:
    """Get the global console instance"""
    global _console
    if _console is None:
        _console = TelemetryConsole()
    return _console


def reset_telemetry_console() -> None:
    """Drop the cached console so the next call re-reads the environment"""
    global _console
    _console = None


def console_error(message: str, module: Optional[str] = None) -> None:
    get_telemetry_console().error(message, module)


def console_warning(message: str, module: Optional[str] = None) -> None:
    get_telemetry_console().warning(message, module)


def console_info(message: str, module: Optional[str] = None) -> None:
    get_telemetry_console().info(message, module)


def console_debug(message: str, module: Optional[str] = None) -> None:
    get_telemetry_console().debug(message, module)


def console_telemetry_event(event_type: str, details: Dict[str, Any], module: Optional[str] = None) -> None:
    get_telemetry_console().telemetry_event(event_type, details, module)
