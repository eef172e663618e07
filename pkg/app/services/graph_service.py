"""Graph service - periodic graph validation, distances and the Laplacian."""

import json
from collections import Counter, deque
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form

from app.constants import BUILTIN_GRAPHS, DEFAULT_DISTANCE_CAP
from app.exceptions import (
    AntiReflexiveError,
    AsymmetricStencilError,
    CapExceededError,
    DegenerateOffsetsError,
    DisconnectedError,
    GraphError,
    GraphFormatError,
    UnknownBuiltinError,
)
from app.models import Cell, ConstantField, Edge, PeriodicBandOperator, PeriodicGraph, Vertex, add_cells, sub_cells

logger = structlog.get_logger()

GRAPH_FILE_KEYS = {"n", "orbits", "edges", "labels", "name"}

RawEdge = Union[Edge, Sequence]


class GraphService:
    """Service for Z^n-periodic graphs."""

    @staticmethod
    def validate_graph(
        n: int,
        num_orbits: int,
        edges: Iterable[RawEdge],
        labels: Sequence[str] = (),
        name: str = "custom",
    ) -> PeriodicGraph:
        """
        Build a PeriodicGraph and check the graph axioms.

        Args:
            n: lattice rank
            num_orbits: number of orbits N
            edges: (j, k, δ) descriptors, orbits counted from 1
            labels: optional orbit names
            name: graph name used in reports

        Returns:
            Validated graph

        Raises:
            AntiReflexiveError, AsymmetricStencilError, DisconnectedError,
            DegenerateOffsetsError, GraphFormatError
        """
        if n < 1:
            raise GraphFormatError(f"Lattice rank must be positive, got {n}")
        if num_orbits < 1:
            raise GraphFormatError(f"Number of orbits must be positive, got {num_orbits}")
        if labels and len(labels) != num_orbits:
            raise GraphFormatError(f"Expected {num_orbits} labels, got {len(labels)}")

        stencil = tuple(GraphService._coerce_edge(raw, n, num_orbits) for raw in edges)

        for edge in stencil:
            if edge.source == edge.target and not any(edge.offset):
                raise AntiReflexiveError(f"Edge {GraphService._edge_text(edge)} joins a vertex to itself")

        counts = Counter(stencil)
        for edge, count in counts.items():
            if counts.get(edge.reversed(), 0) != count:
                raise AsymmetricStencilError(
                    f"Edge {GraphService._edge_text(edge)} appears {count} time(s) "
                    f"but its reverse {GraphService._edge_text(edge.reversed())} "
                    f"appears {counts.get(edge.reversed(), 0)} time(s)"
                )

        graph = PeriodicGraph(n=n, num_orbits=num_orbits, stencil=stencil, labels=tuple(labels), name=name)
        for orbit, degree in enumerate(graph.degrees, start=1):
            if degree < 1:
                raise DisconnectedError(f"Orbit {orbit} has no edges")

        GraphService._check_connectivity(graph)
        logger.debug("Graph validated", name=name, n=n, orbits=num_orbits, edges=len(stencil))
        return graph

    @staticmethod
    def _coerce_edge(raw: RawEdge, n: int, num_orbits: int) -> Edge:
        try:
            j, k, offset = raw
            offset = tuple(int(c) for c in (offset if isinstance(offset, (list, tuple)) else [offset]))
            edge = Edge(int(j), int(k), offset)
        except (TypeError, ValueError) as e:
            raise GraphFormatError(f"Malformed edge descriptor {raw!r}") from e
        if len(edge.offset) != n:
            raise GraphFormatError(f"Edge {raw!r} has offset of length {len(edge.offset)}, expected {n}")
        if not (1 <= edge.source <= num_orbits and 1 <= edge.target <= num_orbits):
            raise GraphFormatError(f"Edge {raw!r} refers to an orbit outside 1..{num_orbits}")
        return edge

    @staticmethod
    def _edge_text(edge: Edge) -> str:
        return f"({edge.source}, {edge.target}, {list(edge.offset)})"

    @staticmethod
    def _check_connectivity(graph: PeriodicGraph):
        """Quotient BFS, then Smith normal form of the cycle offsets."""
        potential: Dict[int, Cell] = {1: graph.origin}
        queue = deque([1])
        while queue:
            orbit = queue.popleft()
            for edge in graph.outgoing[orbit - 1]:
                if edge.target not in potential:
                    potential[edge.target] = add_cells(potential[orbit], edge.offset)
                    queue.append(edge.target)
        if len(potential) != graph.num_orbits:
            missing = sorted(set(range(1, graph.num_orbits + 1)) - set(potential))
            raise DisconnectedError(f"Quotient graph is disconnected; orbits {missing} unreachable from orbit 1")

        # Offset of the closed walk: tree path to source, edge, tree path back from target
        cycles = {
            sub_cells(add_cells(potential[edge.source], edge.offset), potential[edge.target]) for edge in graph.stencil
        }
        cycles.discard(graph.origin)
        if len(cycles) < graph.n:
            raise DegenerateOffsetsError(
                f"Cycle offsets span rank at most {len(cycles)} < {graph.n}; the infinite graph is disconnected"
            )

        snf = smith_normal_form(Matrix(sorted(cycles)), domain=ZZ)
        invariants = [abs(int(snf[i, i])) for i in range(min(snf.shape))]
        nonzero = [d for d in invariants if d != 0]
        if len(nonzero) < graph.n or any(d != 1 for d in nonzero):
            raise DegenerateOffsetsError(
                f"Cycle offsets generate a proper subgroup of Z^{graph.n} (invariant factors {invariants})"
            )

    @staticmethod
    def check_vertex(graph: PeriodicGraph, vertex: Vertex) -> Vertex:
        if not 1 <= vertex.orbit <= graph.num_orbits:
            raise GraphError(f"Orbit {vertex.orbit} outside 1..{graph.num_orbits}")
        if len(vertex.cell) != graph.n:
            raise GraphError(f"Cell {vertex.cell} has wrong rank, expected {graph.n}")
        return Vertex(vertex.orbit, tuple(int(c) for c in vertex.cell))

    @staticmethod
    def graph_distance(graph: PeriodicGraph, x: Vertex, y: Vertex, cap: int = DEFAULT_DISTANCE_CAP) -> int:
        """
        Shortest edge path length by breadth-first search over lazily visited cells.

        Raises:
            CapExceededError: no path of at most ``cap`` hops
        """
        if cap < 0:
            raise ValueError("cap must be non-negative")
        x = GraphService.check_vertex(graph, x)
        y = GraphService.check_vertex(graph, y)
        # ρ is translation invariant, so search from the origin cell
        target = Vertex(y.orbit, sub_cells(y.cell, x.cell))
        start = Vertex(x.orbit, graph.origin)
        if start == target:
            return 0

        seen = {start}
        frontier = [start]
        for hops in range(1, cap + 1):
            next_frontier = []
            for vertex in frontier:
                for neighbour in graph.neighbours(vertex):
                    if neighbour == target:
                        return hops
                    if neighbour not in seen:
                        seen.add(neighbour)
                        next_frontier.append(neighbour)
            frontier = next_frontier
        raise CapExceededError(f"No path from {x} to {y} within {cap} hops")

    @staticmethod
    def ball(graph: PeriodicGraph, center: Vertex, radius: int) -> List[Tuple[Vertex, int]]:
        """Vertices with ρ(center, x) <= radius in deterministic BFS order."""
        center = GraphService.check_vertex(graph, center)
        result = [(center, 0)]
        seen = {center}
        frontier = [center]
        for hops in range(1, radius + 1):
            next_frontier = []
            for vertex in frontier:
                for neighbour in graph.neighbours(vertex):
                    if neighbour not in seen:
                        seen.add(neighbour)
                        next_frontier.append(neighbour)
                        result.append((neighbour, hops))
            frontier = next_frontier
        return result

    @staticmethod
    def laplacian(graph: PeriodicGraph) -> PeriodicBandOperator:
        """(Δu)(x) = (1/m(x)) Σ_{y~x} u(y) in quotient matrix form."""
        size = graph.num_orbits
        matrices: Dict[Cell, np.ndarray] = {}
        for edge in graph.stencil:
            matrix = matrices.setdefault(edge.offset, np.zeros((size, size), dtype=np.complex128))
            matrix[edge.source - 1, edge.target - 1] += 1.0 / graph.degrees[edge.source - 1]
        return PeriodicBandOperator(graph, {delta: ConstantField(m) for delta, m in matrices.items()})

    @staticmethod
    def builtin_graph(name: str, n: int = 1) -> PeriodicGraph:
        """
        Builtin graphs: the Cayley graph of Z^n, the zigzag graph and the honeycomb graph.

        Raises:
            UnknownBuiltinError: name not recognized
        """
        if name == "cayley":
            if n < 1:
                raise GraphFormatError(f"Cayley rank must be positive, got {n}")
            edges = []
            for i in range(n):
                unit = tuple(1 if c == i else 0 for c in range(n))
                edges.append((1, 1, unit))
                edges.append((1, 1, tuple(-c for c in unit)))
            return GraphService.validate_graph(n, 1, edges, name=f"cayley{n}")
        if name == "zigzag":
            edges = [(1, 2, (0,)), (2, 1, (0,)), (2, 1, (1,)), (1, 2, (-1,))]
            return GraphService.validate_graph(1, 2, edges, labels=("x1", "x2"), name="zigzag")
        if name == "honeycomb":
            edges = [
                (1, 2, (0, 0)),
                (2, 1, (0, 0)),
                (1, 2, (-1, 0)),
                (2, 1, (1, 0)),
                (1, 2, (0, -1)),
                (2, 1, (0, 1)),
            ]
            return GraphService.validate_graph(2, 2, edges, labels=("x1", "x2"), name="honeycomb")
        raise UnknownBuiltinError(f"Unknown builtin graph '{name}', expected one of {', '.join(BUILTIN_GRAPHS)}")

    @staticmethod
    def parse_graph(data: dict, name: Optional[str] = None) -> PeriodicGraph:
        """Validate a decoded graph description."""
        if not isinstance(data, dict):
            raise GraphFormatError("Graph description must be an object")
        unknown = set(data) - GRAPH_FILE_KEYS
        if unknown:
            raise GraphFormatError(f"Unknown keys in graph description: {sorted(unknown)}")
        for key in ("n", "orbits", "edges"):
            if key not in data:
                raise GraphFormatError(f"Graph description is missing '{key}'")
        try:
            n = int(data["n"])
            num_orbits = int(data["orbits"])
        except (TypeError, ValueError) as e:
            raise GraphFormatError("'n' and 'orbits' must be integers") from e
        return GraphService.validate_graph(
            n,
            num_orbits,
            data["edges"],
            labels=tuple(str(label) for label in data.get("labels", ())),
            name=str(data.get("name", name or "custom")),
        )

    @staticmethod
    def load_graph(path: Union[str, Path]) -> PeriodicGraph:
        """Load and validate a JSON graph description file."""
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise GraphFormatError(f"{path}: invalid JSON ({e})") from e
        except OSError as e:
            raise GraphFormatError(f"{path}: cannot read ({e})") from e
        logger.info("Graph file loaded", path=str(path))
        return GraphService.parse_graph(data, name=path.stem)
