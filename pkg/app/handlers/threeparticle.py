"""Multiparticle command handlers."""

from typing import TYPE_CHECKING, List

import structlog

from app.handlers.inputs import (
    add_input_arguments,
    add_numeric_arguments,
    add_output_arguments,
    parse_anchor,
    resolve_graph,
)
from app.services.multiparticle_service import MultiparticleService
from app.utils.decorators import spectra_command
from app.utils.export import plot_bands_svg, three_particle_lines
from app.utils.formatters import format_number, format_union
from app.utils.intervals import IntervalUnion

if TYPE_CHECKING:
    from app.cli import RunConfig

logger = structlog.get_logger()


@spectra_command("threeparticle")
def threeparticle_command(run: "RunConfig") -> List[str]:
    """Essential spectrum of the three-particle operator from its channels."""
    graph = resolve_graph(run)
    anchor = parse_anchor(run.anchor, graph)
    w1, w2, w12 = (MultiparticleService.parse_radial(text, anchor) for text in (run.w1, run.w2, run.w12))
    report = MultiparticleService.three_particle_essential_spectrum(
        graph, w1, w2, w12, tol=run.tol, schedule=run.schedule
    )
    if run.svg:
        plot_bands_svg(
            report.inner, run.svg, title=f"{graph.name} three-particle essential spectrum", enclosure=report.outer
        )
    return three_particle_lines(report)


@spectra_command("discrete")
def discrete_command(run: "RunConfig") -> List[str]:
    """Discrete eigenvalues of Δ_Γ + W_1 and the resulting spectrum."""
    graph = resolve_graph(run)
    potential = MultiparticleService.parse_radial(run.w1, parse_anchor(run.anchor, graph))
    bands = MultiparticleService.free_bands(graph, run.tol)
    discrete = MultiparticleService.discrete_eigenvalues(graph, potential, run.schedule, run.tol, bands)
    lines = [f"S {format_union(bands)}", f"discrete {len(discrete)}"]
    for eigenvalue in discrete:
        lines.append(
            f"eigenvalue {format_number(eigenvalue.value)} drift {format_number(eigenvalue.drift)} "
            f"radius {eigenvalue.radius}"
        )
    spectrum = bands.union(*(IntervalUnion.point(d.value) for d in discrete))
    lines.append(f"spectrum {format_union(spectrum)}")
    return lines


def _add_schedule(parser):
    parser.add_argument(
        "--schedule",
        metavar="R1,R2,...",
        help=(
            "increasing ball radii for the finite sections; defaults to 50,100,200, scaled down "
            "until the largest ball fits SPECTRA_MAX_WINDOW_ROWS"
        ),
    )
    parser.add_argument("--anchor", metavar="J:A1,...", help="vertex the radial potentials are centred on")


def register_threeparticle_handlers(subparsers):
    """Register multiparticle handlers."""
    parser = subparsers.add_parser("threeparticle", help="three-particle essential spectrum")
    add_input_arguments(parser, potential=False)
    add_numeric_arguments(parser)
    add_output_arguments(parser, svg=True)
    _add_schedule(parser)
    for flag in ("--w1", "--w2", "--w12"):
        parser.add_argument(flag, metavar="NAME:P1,...", help="radial pair potential, e.g. delta:-0.75")
    parser.set_defaults(handler=threeparticle_command)

    parser = subparsers.add_parser("discrete", help="discrete eigenvalues of a decaying Schrodinger operator")
    add_input_arguments(parser, potential=False)
    add_numeric_arguments(parser)
    add_output_arguments(parser)
    _add_schedule(parser)
    parser.add_argument("--w1", metavar="NAME:P1,...", help="radial potential, e.g. exponential:-1,2")
    parser.set_defaults(handler=discrete_command)

    logger.debug("Multiparticle handlers registered")
