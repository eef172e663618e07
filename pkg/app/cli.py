"""Command-line parser setup and dispatch."""

import argparse
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import structlog

from app.__version__ import __version__
from app.config import config
from app.constants import REPORT_PROJECT_NAME
from app.exceptions import UsageError
from app.handlers.finite_section import register_finite_section_handlers
from app.handlers.graph import register_graph_handlers
from app.handlers.spectrum import register_spectrum_handlers
from app.handlers.threeparticle import register_threeparticle_handlers
from app.models import Cell
from app.utils.decorators import report_error

logger = structlog.get_logger()

# Namespace attributes copied to RunConfig unchanged
PLAIN_OPTIONS = (
    "builtin",
    "rank",
    "graph",
    "potential",
    "grid",
    "tol",
    "window",
    "out",
    "svg",
    "dump",
    "anchor",
    "w1",
    "w2",
    "w12",
)


def _int_list(text: str, flag: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as e:
        raise UsageError(f"{flag}: expected comma-separated integers, got '{text}'") from e


def _complex(text: str) -> complex:
    """Accept Python ('1+2j') and report ('1+2i') notation."""
    text = text.strip()
    if text.endswith("i"):
        text = text[:-1] + "j"
    try:
        return complex(text)
    except ValueError as e:
        raise UsageError(f"--lambda: expected a complex number, got '{text}'") from e


@dataclass
class RunConfig:
    """Validated options of one CLI invocation."""

    command: str
    builtin: Optional[str] = None
    rank: int = 1
    graph: Optional[str] = None
    potential: Optional[str] = None
    grid: int = field(default_factory=lambda: config.grid)
    tol: float = field(default_factory=lambda: config.tol)
    window: int = 10
    schedule: Optional[Tuple[int, ...]] = None
    window_range: Optional[Tuple[float, float]] = None
    spectral_parameter: complex = 0j
    out: Optional[str] = None
    svg: Optional[str] = None
    dump: Optional[str] = None
    w1: str = "zero"
    w2: str = "zero"
    w12: str = "zero"
    anchor: Optional[str] = None
    directions: Tuple[Cell, ...] = ()

    def validate(self):
        """
        Raises:
            UsageError: naming the offending flag
        """
        if self.grid < 2:
            raise UsageError(f"--grid must be at least 2, got {self.grid}")
        if not self.tol > 0:
            raise UsageError(f"--tol must be positive, got {self.tol}")
        if self.window < 1:
            raise UsageError(f"--window must be at least 1, got {self.window}")
        if self.rank < 1:
            raise UsageError(f"-n must be at least 1, got {self.rank}")
        if self.schedule is not None:
            if len(self.schedule) < 2 or any(r < 1 for r in self.schedule):
                raise UsageError("--schedule needs at least two positive radii")
            if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
                raise UsageError("--schedule radii must increase")
        if self.window_range is not None and self.window_range[0] > self.window_range[1]:
            raise UsageError(f"--range is empty: {self.window_range[0]} > {self.window_range[1]}")
        for direction in self.directions:
            if not any(direction):
                raise UsageError("--direction must be nonzero")

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> "RunConfig":
        options = vars(args)
        run = cls(command=args.command)
        for name in PLAIN_OPTIONS:
            if options.get(name) is not None:
                setattr(run, name, options[name])
        if options.get("schedule") is not None:
            run.schedule = _int_list(options["schedule"], "--schedule")
        if options.get("range") is not None:
            run.window_range = (float(options["range"][0]), float(options["range"][1]))
        if options.get("spectral_parameter") is not None:
            run.spectral_parameter = _complex(options["spectral_parameter"])
        run.directions = tuple(_int_list(text, "--direction") for text in options.get("direction") or [])
        run.validate()
        return run


def create_parser() -> argparse.ArgumentParser:
    """Create the parser and register every subcommand."""
    parser = argparse.ArgumentParser(
        prog=REPORT_PROJECT_NAME,
        description="Spectra and essential spectra of band operators on periodic graphs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    register_graph_handlers(subparsers)
    register_spectrum_handlers(subparsers)
    register_threeparticle_handlers(subparsers)
    register_finite_section_handlers(subparsers)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the selected command and return the exit status."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad usage and 0 for --help/--version
        return int(e.code or 0)
    try:
        run_config = RunConfig.from_namespace(args)
    except UsageError as e:
        logger.error("Invalid usage", command=args.command, error=str(e))
        return report_error(e)
    logger.debug("Dispatching command", command=run_config.command)
    return args.handler(run_config)
