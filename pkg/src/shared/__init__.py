"""Shared utilities and constants."""

from src.shared.config import Settings, settings
from src.shared.logging import bind_run_context, clear_run_context, configure_logging, get_logger

__all__ = ["Settings", "settings", "bind_run_context", "clear_run_context", "configure_logging", "get_logger"]
