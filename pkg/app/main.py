"""Main entry point for lattice-spectra."""

import logging
import sys
from typing import Optional, Sequence

import structlog
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from app.__version__ import __version__  # noqa: E402
from app.cli import run  # noqa: E402
from app.config import config  # noqa: E402
from app.utils.decorators import EXIT_USAGE_ERROR  # noqa: E402

# Configure structlog
structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
        structlog.processors.JSONRenderer(),
    ],
    context_class=dict,
    logger_factory=structlog.stdlib.LoggerFactory(),
    cache_logger_on_first_use=True,
)

# Reports own stdout
logging.basicConfig(
    format="%(message)s",
    stream=sys.stderr,
    level=getattr(logging, config.log_level.upper(), logging.WARNING),
)

logger = structlog.get_logger()


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function."""
    try:
        config.validate()
    except ValueError as e:
        logger.error("Invalid configuration", error=str(e))
        print(f"error: Config: {e}", file=sys.stderr)
        return EXIT_USAGE_ERROR
    logger.debug("Starting", version=__version__)
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
