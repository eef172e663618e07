"""Finite-section command handlers."""

from typing import TYPE_CHECKING, List

import structlog

from app.handlers.inputs import add_input_arguments, add_output_arguments, resolve_operator
from app.services.finite_section_service import FiniteSectionService
from app.services.multiparticle_service import MultiparticleService
from app.utils.decorators import spectra_command
from app.utils.formatters import format_complex, format_interval

if TYPE_CHECKING:
    from app.cli import RunConfig

logger = structlog.get_logger()


@spectra_command("finite-section")
def finite_section_command(run: "RunConfig") -> List[str]:
    """Eigenvalues of the box truncation, one per line."""
    operator = resolve_operator(run)
    window = FiniteSectionService.truncate(operator, run.window)
    if run.dump:
        FiniteSectionService.dump_matrix(window, run.dump)
    hermitian = FiniteSectionService.is_hermitian(window)
    values = FiniteSectionService.window_eigenvalues(window.matrix, hermitian)
    lines = [f"rows {window.rows}", f"radius {window.radius}", f"hermitian {'yes' if hermitian else 'no'}"]
    lines.extend(format_complex(value) for value in values)
    return lines


@spectra_command("rayleigh")
def rayleigh_command(run: "RunConfig") -> List[str]:
    """Smallest and largest truncation eigenvalue of a self-adjoint operator."""
    operator = resolve_operator(run)
    return [format_interval(MultiparticleService.rayleigh_bounds(operator, run.window))]


def _add_window(parser):
    parser.add_argument("--window", type=int, metavar="R", help="box window radius (default 10)")


def register_finite_section_handlers(subparsers):
    """Register finite-section handlers."""
    parser = subparsers.add_parser("finite-section", help="eigenvalues of a finite box truncation")
    add_input_arguments(parser)
    add_output_arguments(parser)
    _add_window(parser)
    parser.add_argument("--dump", metavar="FILE", help="write the dense window matrix to FILE")
    parser.set_defaults(handler=finite_section_command)

    parser = subparsers.add_parser("rayleigh", help="Rayleigh bounds from a finite box truncation")
    add_input_arguments(parser)
    add_output_arguments(parser)
    _add_window(parser)
    parser.set_defaults(handler=rayleigh_command)

    logger.debug("Finite-section handlers registered")
