"""
Structured logging configuration using structlog.

JSON lines in production so runs can be collected and diffed, colored
console output for local work. Every event carries the run context bound
by the entry point (subcommand, seed, epoch length) through contextvars.
"""

import logging
import sys
from typing import Any

import structlog

from src.shared.config import settings


def _level(level: str | None) -> int:
    if level is None and settings.debug:
        return logging.DEBUG
    return logging.getLevelNamesMapping().get((level or settings.log_level).upper(), logging.INFO)


def configure_logging(level: str | None = None) -> None:
    """
    Configure structlog based on environment.

    Logs go to standard error; standard output is left to the subcommands.
    The CLI calls this once per invocation, so reconfiguring must take effect
    for loggers created at import time.

    Args:
        level: Optional level overriding ``settings.log_level`` and ``settings.debug``.
    """
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=_level(level), force=True)

    processors: list[structlog.types.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
    ]
    if settings.is_production:
        processors += [structlog.processors.dict_tracebacks, structlog.processors.JSONRenderer(sort_keys=True)]
    else:
        processors += [structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty())]

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )


def bind_run_context(**values: Any) -> None:
    """Attach ``values`` to every event logged until :func:`clear_run_context`; None values are skipped."""
    structlog.contextvars.bind_contextvars(**{key: value for key, value in values.items() if value is not None})


def clear_run_context() -> None:
    structlog.contextvars.clear_contextvars()


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """
    Get a configured logger instance.

    Args:
        name: Logger name, typically __name__ of the calling module.

    Returns:
        Configured structlog logger instance.
    """
    return structlog.get_logger(name)
