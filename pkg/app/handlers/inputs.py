"""Shared CLI arguments and input resolution for command handlers."""

import argparse
from typing import TYPE_CHECKING, Optional

from app.constants import BUILTIN_GRAPHS
from app.exceptions import UsageError
from app.models import BandOperator, PeriodicGraph, Vertex
from app.services.graph_service import GraphService
from app.services.operator_service import OperatorService

if TYPE_CHECKING:
    from app.cli import RunConfig


def add_input_arguments(parser: argparse.ArgumentParser, potential: bool = True):
    """--builtin/-n/--graph and optionally --potential."""
    source = parser.add_argument_group("input")
    source.add_argument("--builtin", choices=BUILTIN_GRAPHS, help="builtin graph")
    source.add_argument("-n", "--rank", type=int, default=1, help="lattice rank of the builtin cayley graph")
    source.add_argument("--graph", metavar="FILE", help="JSON graph description")
    if potential:
        source.add_argument("--potential", metavar="FILE", help="JSON potential description")


def add_output_arguments(parser: argparse.ArgumentParser, svg: bool = False):
    parser.add_argument("--out", metavar="FILE", help="write the report to FILE instead of stdout")
    if svg:
        parser.add_argument("--svg", metavar="FILE", help="also write an SVG plot")


def add_numeric_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--grid", type=int, help="torus grid points per axis (M)")
    parser.add_argument("--tol", type=float, help="enclosure tolerance")


def add_direction_argument(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--direction",
        action="append",
        default=[],
        metavar="D1,...,Dn",
        help="extra ray direction for limit detection (repeatable)",
    )


def resolve_graph(run: "RunConfig") -> PeriodicGraph:
    if run.graph and run.builtin:
        raise UsageError("--graph and --builtin are mutually exclusive")
    if run.graph:
        return GraphService.load_graph(run.graph)
    if run.builtin:
        return GraphService.builtin_graph(run.builtin, run.rank)
    raise UsageError("one of --builtin or --graph is required")


def resolve_operator(run: "RunConfig", graph: Optional[PeriodicGraph] = None) -> BandOperator:
    """Δ_Γ, or Δ_Γ + vI when --potential is given."""
    graph = resolve_graph(run) if graph is None else graph
    if run.potential:
        return OperatorService.schrodinger(graph, OperatorService.load_potential(run.potential, graph))
    return GraphService.laplacian(graph)


def parse_anchor(text: Optional[str], graph: PeriodicGraph) -> Vertex:
    """
    Parse 'j:a1,...,an' into a vertex; default is orbit 1 of the origin cell.

    Examples:
        1:0
        2:0,-1
    """
    if not text:
        return Vertex(1, graph.origin)
    orbit, _, cell = text.partition(":")
    try:
        vertex = Vertex(int(orbit), tuple(int(c) for c in cell.split(",")) if cell else graph.origin)
    except ValueError as e:
        raise UsageError(f"--anchor: malformed vertex '{text}'") from e
    if not 1 <= vertex.orbit <= graph.num_orbits or len(vertex.cell) != graph.n:
        raise UsageError(f"--anchor: vertex '{text}' is not on graph {graph.name}")
    return vertex
