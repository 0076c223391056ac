"""
Utility functions for the shrinklab command line.
"""

import logging
from importlib import metadata
from typing import Any

from rich.console import Console
from rich.logging import RichHandler

# Initialize Rich console
console = Console()

LOGGER_NAME = "shrinklab"
PROGRESS_LOGGERS = ("shrinklab.main", "shrinklab.commands")


def setup_logging(verbose: bool = False) -> logging.Logger:
    """Route shrinklab log records through one RichHandler on the shared console.

    The engine logs at WARNING and command progress at INFO; ``verbose``
    lowers everything to DEBUG.
    """
    handler = RichHandler(console=console, show_path=False, rich_tracebacks=verbose,
                          log_time_format="[%X]")
    handler.setFormatter(logging.Formatter("%(message)s"))
    root = logging.getLogger(LOGGER_NAME)
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)
    for name in PROGRESS_LOGGERS:
        logging.getLogger(name).setLevel(logging.NOTSET if verbose else logging.INFO)
    return root


def format_value(value: Any, digits: int = 6) -> str:
    """Short text for a table cell."""
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if value != value:
            return "nan"
        if value == 0.0 or 1e-3 <= abs(value) < 1e6:
            return f"{value:.{digits}f}".rstrip("0").rstrip(".") or "0"
        return f"{value:.{digits - 3}e}"
    return str(value)


def get_version() -> str:
    """Installed package version, or the source tree's when not installed."""
    try:
        return metadata.version("shrinklab")
    except metadata.PackageNotFoundError:
        from . import __version__
        return __version__
