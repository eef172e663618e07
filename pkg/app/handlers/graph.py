"""Graph and symbol command handlers."""

from typing import TYPE_CHECKING, List

import structlog

from app.handlers.inputs import add_input_arguments, add_output_arguments, resolve_graph, resolve_operator
from app.services.symbol_service import SymbolService
from app.utils.decorators import spectra_command
from app.utils.formatters import format_cell

if TYPE_CHECKING:
    from app.cli import RunConfig

logger = structlog.get_logger()


@spectra_command("validate")
def validate_command(run: "RunConfig") -> List[str]:
    """Check the graph axioms and summarize the stencil."""
    graph = resolve_graph(run)
    lines = [
        f"graph {graph.name}",
        f"rank {graph.n}",
        f"orbits {graph.num_orbits}",
        f"edges {len(graph.stencil)}",
        "degrees " + " ".join(str(d) for d in graph.degrees),
    ]
    for edge in graph.stencil:
        lines.append(
            f"edge {graph.orbit_label(edge.source)} -> {graph.orbit_label(edge.target)} {format_cell(edge.offset)}"
        )
    lines.append("ok")
    return lines


@spectra_command("symbol")
def symbol_command(run: "RunConfig") -> List[str]:
    """Print the symbol terms r(β)."""
    operator = resolve_operator(run)
    symbol = SymbolService.build_symbol(operator)
    return [f"size {symbol.size}", f"terms {len(symbol.terms)}", *SymbolService.symbol_terms_text(symbol)]


def register_graph_handlers(subparsers):
    """Register graph handlers."""
    parser = subparsers.add_parser("validate", help="check the graph axioms")
    add_input_arguments(parser, potential=False)
    add_output_arguments(parser)
    parser.set_defaults(handler=validate_command)

    parser = subparsers.add_parser("symbol", help="print the symbol of a periodic operator")
    add_input_arguments(parser)
    add_output_arguments(parser)
    parser.set_defaults(handler=symbol_command)

    logger.debug("Graph handlers registered")
