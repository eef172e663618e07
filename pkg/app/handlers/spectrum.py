"""Spectrum command handlers: bands, curves, ess, gaps and fredholm."""

from typing import TYPE_CHECKING, List

import structlog

from app.handlers.inputs import (
    add_direction_argument,
    add_input_arguments,
    add_numeric_arguments,
    add_output_arguments,
    resolve_operator,
)
from app.services.limit_service import LimitService
from app.services.symbol_service import SymbolService
from app.utils.decorators import spectra_command
from app.utils.export import (
    bands_lines,
    curves_csv,
    limit_report_lines,
    plot_bands_svg,
    plot_curves_svg,
)
from app.utils.formatters import format_angles, format_complex, format_number, format_open_interval

if TYPE_CHECKING:
    from app.cli import RunConfig

logger = structlog.get_logger()


@spectra_command("bands")
def bands_command(run: "RunConfig") -> List[str]:
    """Certified bands of a self-adjoint periodic operator, one interval per line."""
    operator = resolve_operator(run)
    symbol = SymbolService.build_symbol(operator)
    bands = SymbolService.selfadjoint_bands(symbol, tol=run.tol, grid_size=run.grid)
    if run.svg:
        plot_bands_svg(bands, run.svg, title=operator.graph.name)
    return bands_lines(bands)


@spectra_command("curves")
def curves_command(run: "RunConfig") -> List[str]:
    """Dispersion curves on the M^n angle grid as CSV rows."""
    operator = resolve_operator(run)
    curves = SymbolService.dispersion_curves(SymbolService.build_symbol(operator), grid_size=run.grid)
    if run.svg:
        plot_curves_svg(curves, run.svg, title=operator.graph.name)
    return curves_csv(curves).rstrip("\n").split("\n")


@spectra_command("ess")
def ess_command(run: "RunConfig") -> List[str]:
    """Limit family and the essential spectrum as the union of its members' spectra."""
    operator = resolve_operator(run)
    report = LimitService.report(
        operator, grid_size=run.grid, tol=run.tol, directions=run.directions, window=run.window_range
    )
    if run.svg and report.spectrum is not None:
        plot_bands_svg(report.spectrum, run.svg, title=f"{operator.graph.name} essential spectrum", gaps=report.gaps)
    return limit_report_lines(report)


@spectra_command("gaps")
def gaps_command(run: "RunConfig") -> List[str]:
    """Open gaps of the essential spectrum inside --range (default: its hull)."""
    operator = resolve_operator(run)
    spectrum = LimitService.report(operator, grid_size=run.grid, tol=run.tol, directions=run.directions).spectrum
    if spectrum is None:
        logger.info("Gap detection skipped for non-self-adjoint operator")
        return ["gaps none (spectrum is not real)"]
    window = run.window_range or (spectrum.lower, spectrum.upper)
    gaps = LimitService.gaps(spectrum, *window)
    if run.svg:
        plot_bands_svg(spectrum, run.svg, title=f"{operator.graph.name} gaps", gaps=gaps)
    return [f"gaps {len(gaps)}", *(format_open_interval(gap) for gap in gaps)]


@spectra_command("fredholm")
def fredholm_command(run: "RunConfig") -> List[str]:
    """Decide whether A - λI is Fredholm."""
    operator = resolve_operator(run)
    result = LimitService.fredholm_check(
        operator, run.spectral_parameter, tol=run.tol, directions=run.directions, grid_size=run.grid
    )
    lines = [f"lambda {format_complex(run.spectral_parameter)}", f"fredholm {'yes' if result.fredholm else 'no'}"]
    if not result.fredholm:
        lines.append(f"member {result.failing_member + 1}")
        lines.append(f"witness {format_angles(result.witness or ())}")
    lines.append(f"min_abs_det {format_number(result.min_abs_det)}")
    return lines


def _add_common(parser, svg: bool = False):
    add_input_arguments(parser)
    add_numeric_arguments(parser)
    add_output_arguments(parser, svg=svg)


def register_spectrum_handlers(subparsers):
    """Register spectrum handlers."""
    parser = subparsers.add_parser("bands", help="certified bands of a self-adjoint periodic operator")
    _add_common(parser, svg=True)
    parser.set_defaults(handler=bands_command)

    parser = subparsers.add_parser("curves", help="dispersion curves as CSV")
    _add_common(parser, svg=True)
    parser.set_defaults(handler=curves_command)

    parser = subparsers.add_parser("ess", help="limit family and essential spectrum")
    _add_common(parser, svg=True)
    add_direction_argument(parser)
    parser.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"), help="report gaps inside [LO, HI]")
    parser.set_defaults(handler=ess_command)

    parser = subparsers.add_parser("gaps", help="gaps of the essential spectrum")
    _add_common(parser, svg=True)
    add_direction_argument(parser)
    parser.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"), help="search window")
    parser.set_defaults(handler=gaps_command)

    parser = subparsers.add_parser("fredholm", help="Fredholm test for A - lambda I")
    _add_common(parser)
    add_direction_argument(parser)
    parser.add_argument(
        "--lambda", dest="spectral_parameter", required=True, metavar="Z", help="spectral parameter, e.g. 2 or 1+0.5j"
    )
    parser.set_defaults(handler=fredholm_command)

    logger.debug("Spectrum handlers registered")
