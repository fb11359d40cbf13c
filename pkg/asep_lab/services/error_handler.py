"""
Logging setup and error reporting
"""
import logging
import sys
import traceback
import uuid
from datetime import datetime, timezone
from typing import Optional, TextIO

import structlog

from asep_lab.errors import AsepLabError

EXIT_PASS = 0
EXIT_CRITERION_FAILED = 1
EXIT_USAGE = 2
EXIT_FAILURE = 3
EXIT_INTERRUPTED = 130


def setup_logging(level: str = "INFO", fmt: str = "console", stream: Optional[TextIO] = None) -> None:
    """Configure structlog once per process; logs go to stderr so stdout stays machine-readable"""
    renderer = structlog.processors.JSONRenderer() if fmt == "json" else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(getattr(logging, level.upper(), logging.INFO)),
        logger_factory=structlog.PrintLoggerFactory(file=stream or sys.stderr),
        cache_logger_on_first_use=False,
    )


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, AsepLabError):
        return error.exit_code
    if isinstance(error, KeyboardInterrupt):
        return EXIT_INTERRUPTED
    return EXIT_FAILURE


class ErrorHandler:
    """Logs failures with a short id the user can quote"""

    def __init__(self):
        self.logger = structlog.get_logger("asep_lab")

    def log_error(self, error: BaseException, **context) -> str:
        error_id = str(uuid.uuid4())[:8]
        details = {
            "error_id": error_id,
            "error_type": type(error).__name__,
            "error_message": str(error),
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "exit_code": exit_code_for(error),
            **context,
        }
        if not isinstance(error, AsepLabError):
            details["traceback"] = "".join(traceback.format_exception(type(error), error, error.__traceback__))
        self.logger.error("command_failed", **details)
        return error_id


# Global error handler instance
error_handler = ErrorHandler()
