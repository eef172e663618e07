"""Decorators for CLI command handlers."""

import functools
import sys
from pathlib import Path
from typing import Callable, List

import structlog

from app.exceptions import SpectraError, UsageError
from app.utils.formatters import report_header

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


def report_error(error: SpectraError) -> int:
    """Print '<Code>: message' to stderr and return the matching exit status."""
    print(f"error: {error.code}: {error}", file=sys.stderr)
    if isinstance(error, UsageError):
        return EXIT_USAGE_ERROR
    return EXIT_DOMAIN_ERROR


def write_report(text: str, out=None):
    """Write to ``out`` when given, stdout otherwise."""
    if out:
        Path(out).write_text(text)
        logger.info("Report written", path=str(out), bytes=len(text))
    else:
        sys.stdout.write(text)


def spectra_command(name: str) -> Callable:
    """
    Decorator for subcommand handlers.

    The handler returns report lines. The wrapper prefixes the versioned header,
    routes the text to --out or stdout and maps domain errors to exit codes.

    Usage:
        @spectra_command("bands")
        def bands_command(run: RunConfig) -> List[str]:
            ...
    """

    def decorator(func: Callable[..., List[str]]) -> Callable[..., int]:
        @functools.wraps(func)
        def wrapper(run, *args, **kwargs) -> int:
            try:
                lines = func(run, *args, **kwargs)
            except SpectraError as e:
                logger.error("Command failed", command=name, code=e.code, error=str(e))
                return report_error(e)
            try:
                write_report("\n".join([report_header(name), *lines]) + "\n", getattr(run, "out", None))
            except OSError as e:
                logger.error("Cannot write report", command=name, error=str(e))
                print(f"error: Output: {e}", file=sys.stderr)
                return EXIT_DOMAIN_ERROR
            logger.debug("Command finished", command=name, lines=len(lines))
            return EXIT_OK

        wrapper.command_name = name  # type: ignore[attr-defined]
        return wrapper

    return decorator
