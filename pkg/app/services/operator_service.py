"""Operator service - band operators in quotient matrix form."""

import itertools
import json
import math
from collections import defaultdict
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from app.config import config
from app.constants import KERNEL_SPOT_SAMPLES
from app.exceptions import (
    BandRadiusViolatedError,
    GraphMismatchError,
    NotDiagonalError,
    PotentialFormatError,
    UnboundedCoefficientError,
)
from app.models import (
    AdjointField,
    BandOperator,
    Cell,
    CoefficientField,
    ConstantField,
    DeclaredLimit,
    PeriodicBandOperator,
    PeriodicGraph,
    ProductField,
    RuleField,
    ScaledField,
    SOPotential,
    SumField,
    TableField,
    Vertex,
    add_cells,
    neg_cell,
    sub_cells,
)
from app.services.graph_service import GraphService

logger = structlog.get_logger()

Kernel = Callable[[Vertex, Vertex], complex]
Function = Mapping[Vertex, complex]

POTENTIAL_FILE_KEYS = {"periodic", "table", "rule", "limits", "directions"}


def window_cells(n: int, radius: int) -> List[Cell]:
    """Cells with |cell|_∞ <= radius in lexicographic order."""
    return [tuple(c) for c in itertools.product(range(-radius, radius + 1), repeat=n)]


# =============================================================================
# FIELD ARITHMETIC (constant folding)
# =============================================================================


def sum_fields(fields: Sequence[CoefficientField]) -> CoefficientField:
    if len(fields) == 1:
        return fields[0]
    if all(f.is_constant for f in fields):
        return ConstantField(sum((f.at(()) for f in fields[1:]), fields[0].at(())))
    return SumField(tuple(fields))


def product_field(left: CoefficientField, right: CoefficientField, shift: Cell) -> CoefficientField:
    if left.is_constant and right.is_constant:
        return ConstantField(left.at(shift) @ right.at(shift))
    return ProductField(left, right, shift)


def adjoint_field(inner: CoefficientField, shift: Cell) -> CoefficientField:
    if inner.is_constant:
        return ConstantField(inner.at(shift).conj().T)
    return AdjointField(inner, shift)


def scaled_field(inner: CoefficientField, factor: complex) -> CoefficientField:
    if inner.is_constant:
        return ConstantField(factor * inner.at(()))
    return ScaledField(inner, factor)


def make_operator(graph: PeriodicGraph, terms: Mapping[Cell, CoefficientField]) -> BandOperator:
    """PeriodicBandOperator when every term is constant, BandOperator otherwise."""
    if all(term.is_constant for term in terms.values()):
        return PeriodicBandOperator(graph, dict(terms))
    return BandOperator(graph, dict(terms))


def column_sum_sup(matrices: Iterable[np.ndarray]) -> float:
    """sup over the matrices of max_j Σ_i |m_ij|."""
    return float(max((np.abs(m).sum(axis=0).max(initial=0.0) for m in matrices), default=0.0))


# =============================================================================
# POTENTIAL RULES
# =============================================================================


def _per_orbit(params: Mapping, key: str, num_orbits: int) -> List[float]:
    if key not in params:
        raise PotentialFormatError(f"Rule parameter '{key}' is required")
    values = params[key]
    if not isinstance(values, (list, tuple)):
        values = [values] * num_orbits
    if len(values) != num_orbits:
        raise PotentialFormatError(f"Rule parameter '{key}' needs {num_orbits} values, got {len(values)}")
    return values


def _norm(cell: Cell) -> float:
    return math.sqrt(sum(float(c) * float(c) for c in cell))


def _ray_limit_rule(params: Mapping, n: int, num_orbits: int):
    """v(α·x_j) = c_j + d_j·α / (1 + |α|)."""
    c = [float(x) for x in _per_orbit(params, "c", num_orbits)]
    d = []
    for raw in _per_orbit(params, "d", num_orbits):
        vector = [float(x) for x in (raw if isinstance(raw, (list, tuple)) else [raw])]
        if len(vector) != n:
            raise PotentialFormatError(f"Rule parameter 'd' entries need {n} components")
        d.append(vector)

    def rule(cell: Cell) -> np.ndarray:
        scale = 1.0 + _norm(cell)
        return np.diag([c[j] + sum(dj * float(a) for dj, a in zip(d[j], cell)) / scale for j in range(num_orbits)])

    bound = max(abs(c[j]) + math.sqrt(sum(x * x for x in d[j])) for j in range(num_orbits))
    return rule, bound


def _decaying_rule(params: Mapping, n: int, num_orbits: int):
    """v(α·x_j) = a_j·exp(-rate·|α|)."""
    amplitude = [float(x) for x in _per_orbit(params, "amplitude", num_orbits)]
    rate = float(params.get("rate", 1.0))
    if rate <= 0:
        raise PotentialFormatError("Rule parameter 'rate' must be positive")

    def rule(cell: Cell) -> np.ndarray:
        return np.diag([a * math.exp(-rate * _norm(cell)) for a in amplitude])

    return rule, max(abs(a) for a in amplitude)


def _sqrt_oscillation_rule(params: Mapping, n: int, num_orbits: int):
    """v(α·x_j) = c_j + d_j·sin(sqrt|α|): slowly oscillating without ray limits."""
    c = [float(x) for x in _per_orbit(params, "c", num_orbits)]
    d = [float(x) for x in _per_orbit(params, "d", num_orbits)]

    def rule(cell: Cell) -> np.ndarray:
        wave = math.sin(math.sqrt(_norm(cell)))
        return np.diag([c[j] + d[j] * wave for j in range(num_orbits)])

    return rule, max(abs(c[j]) + abs(d[j]) for j in range(num_orbits))


def _alternating_rule(params: Mapping, n: int, num_orbits: int):
    """v(α·x_j) = d_j·(-1)^(α_1 + ... + α_n): bounded but not slowly oscillating."""
    d = [float(x) for x in _per_orbit(params, "d", num_orbits)]

    def rule(cell: Cell) -> np.ndarray:
        sign = -1.0 if sum(cell) % 2 else 1.0
        return np.diag([sign * dj for dj in d])

    return rule, max(abs(dj) for dj in d)


POTENTIAL_RULES = {
    "ray_limit": _ray_limit_rule,
    "decaying": _decaying_rule,
    "sqrt_oscillation": _sqrt_oscillation_rule,
    "alternating": _alternating_rule,
}


class OperatorService:
    """Service for band operators."""

    # -------------------------------------------------------------------------
    # Construction
    # -------------------------------------------------------------------------

    @staticmethod
    def identity(graph: PeriodicGraph) -> PeriodicBandOperator:
        return PeriodicBandOperator(graph, {graph.origin: ConstantField(np.eye(graph.num_orbits))})

    @staticmethod
    def multiplication(graph: PeriodicGraph, field: CoefficientField) -> BandOperator:
        """Multiplication by a (matrix) coefficient field: single term at δ = 0."""
        if field.size != graph.num_orbits:
            raise GraphMismatchError(f"Field of size {field.size} on a graph with {graph.num_orbits} orbits")
        return make_operator(graph, {graph.origin: field})

    @staticmethod
    def quotient_transform(
        graph: PeriodicGraph,
        kernel: Kernel,
        radius: int,
        periodic: bool = False,
        sample_radius: Optional[int] = None,
    ) -> BandOperator:
        """
        Reorganize a vertex kernel k(x, y) into shift terms δ = β - α.

        Args:
            graph: underlying periodic graph
            kernel: k((i, α), (j, β)), zero whenever ρ(x, y) > radius
            radius: declared band radius (graph distance)
            periodic: kernel commutes with shifts; terms become constant
            sample_radius: cell window for bounds and spot checks

        Raises:
            BandRadiusViolatedError: nonzero value found beyond the declared radius
        """
        sample_radius = config.sample_radius if sample_radius is None else sample_radius
        size = graph.num_orbits
        reach: Dict[Cell, np.ndarray] = {}
        shells: List[Tuple[int, Vertex]] = []
        for i in range(1, size + 1):
            for vertex, hops in GraphService.ball(graph, Vertex(i, graph.origin), radius + KERNEL_SPOT_SAMPLES):
                if hops <= radius:
                    mask = reach.setdefault(vertex.cell, np.zeros((size, size), dtype=bool))
                    mask[i - 1, vertex.orbit - 1] = True
                else:
                    shells.append((i, vertex))

        spot_cells = window_cells(graph.n, 1)
        for i, vertex in shells:
            for alpha in spot_cells:
                x = Vertex(i, alpha)
                y = graph.act(alpha, vertex)
                if kernel(x, y) != 0:
                    raise BandRadiusViolatedError(f"Kernel is nonzero at {x}, {y} beyond declared radius {radius}")

        def coefficient(delta: Cell, mask: np.ndarray, alpha: Cell) -> np.ndarray:
            matrix = np.zeros((size, size), dtype=np.complex128)
            for i, j in zip(*np.nonzero(mask)):
                matrix[i, j] = kernel(Vertex(i + 1, alpha), Vertex(j + 1, add_cells(alpha, delta)))
            return matrix

        terms: Dict[Cell, CoefficientField] = {}
        cells = window_cells(graph.n, sample_radius)
        for delta in sorted(reach):
            mask = reach[delta]
            if periodic:
                matrix = coefficient(delta, mask, graph.origin)
                if np.any(matrix != 0):
                    terms[delta] = ConstantField(matrix)
                continue
            bound = max(float(np.abs(coefficient(delta, mask, alpha)).max()) for alpha in cells)
            terms[delta] = RuleField(
                rule=lambda alpha, delta=delta, mask=mask: coefficient(delta, mask, alpha),
                size=size,
                bound=bound,
                name="kernel",
            )
        logger.debug("Kernel transformed", shifts=len(terms), radius=radius, periodic=periodic)
        return make_operator(graph, terms)

    @staticmethod
    def schrodinger(graph: PeriodicGraph, potential: CoefficientField) -> BandOperator:
        """Δ_Γ + vI for a diagonal potential field."""
        OperatorService.check_diagonal(graph, potential)
        return OperatorService.add(GraphService.laplacian(graph), OperatorService.multiplication(graph, potential))

    @staticmethod
    def check_diagonal(graph: PeriodicGraph, field: CoefficientField, sample_radius: Optional[int] = None):
        """Raises NotDiagonalError unless every sampled coefficient is diagonal."""
        if isinstance(field, TableField):
            cells = list(field.entries) + [graph.origin]
        elif field.is_constant:
            cells = [graph.origin]
        else:
            cells = window_cells(graph.n, config.sample_radius if sample_radius is None else sample_radius)
        for cell in cells:
            if not field.is_diagonal_at(cell):
                raise NotDiagonalError(f"Potential is not diagonal at cell {cell}")

    @staticmethod
    def so_combination(
        graph: PeriodicGraph, triples: Sequence[Tuple[CoefficientField, PeriodicBandOperator, CoefficientField]]
    ) -> BandOperator:
        """Finite sum Σ b_k A_kl c_l I of periodic operators with slowly oscillating multipliers."""
        result: Optional[BandOperator] = None
        for b, periodic, c in triples:
            if not periodic.is_periodic:
                raise GraphMismatchError("Middle factor of a slowly oscillating product must be periodic")
            term = OperatorService.compose(
                OperatorService.compose(OperatorService.multiplication(graph, b), periodic),
                OperatorService.multiplication(graph, c),
            )
            result = term if result is None else OperatorService.add(result, term)
        if result is None:
            return PeriodicBandOperator(graph, {})
        return result

    # -------------------------------------------------------------------------
    # Evaluation
    # -------------------------------------------------------------------------

    @staticmethod
    def kernel(operator: BandOperator, x: Vertex, y: Vertex) -> complex:
        """k_A(x, y): entry (i, j) of the term δ = β - α evaluated at α."""
        delta = sub_cells(y.cell, x.cell)
        return complex(operator.coefficient(delta, x.cell)[x.orbit - 1, y.orbit - 1])

    @staticmethod
    def apply(operator: BandOperator, u: Function) -> Dict[Vertex, complex]:
        """(Au)(x) = Σ_y k_A(x, y) u(y) for finitely supported u."""
        result: Dict[Vertex, complex] = defaultdict(complex)
        for y, value in u.items():
            if value == 0:
                continue
            k = y.orbit - 1
            for delta, field in operator.terms.items():
                alpha = sub_cells(y.cell, delta)
                column = field.at(alpha)[:, k]
                for i in np.nonzero(column)[0]:
                    result[Vertex(int(i) + 1, alpha)] += column[i] * value
        return {x: result[x] for x in sorted(result) if result[x] != 0}

    @staticmethod
    def wiener_norm(operator: BandOperator, sample_radius: Optional[int] = None) -> float:
        """
        Σ_δ h_A(δ) with h_A(δ) = sup_α max_j Σ_i |r^{ij}(α, α + δ)|.

        Raises:
            UnboundedCoefficientError: a sampled coefficient exceeds its declared bound
        """
        sample_radius = config.sample_radius if sample_radius is None else sample_radius
        cells: Optional[List[Cell]] = None
        total = 0.0
        for delta, field in operator.terms.items():
            if field.is_constant:
                total += column_sum_sup([field.at(operator.graph.origin)])
                continue
            if isinstance(field, TableField):
                total += column_sum_sup([field.default, *field.entries.values()])
                continue
            if cells is None:
                cells = window_cells(operator.graph.n, sample_radius)
            samples = [field.at(cell) for cell in cells]
            bound = field.declared_bound()
            entry_sup = max(float(np.abs(m).max(initial=0.0)) for m in samples)
            if bound is not None and entry_sup > bound * (1 + 1e-12) + 1e-15:
                raise UnboundedCoefficientError(
                    f"Coefficient at shift {delta} reaches {entry_sup:.6g}, above its declared bound {bound:.6g}"
                )
            total += column_sum_sup(samples)
        return total

    # -------------------------------------------------------------------------
    # Algebra
    # -------------------------------------------------------------------------

    @staticmethod
    def _check_same_graph(a: BandOperator, b: BandOperator):
        if a.graph != b.graph:
            raise GraphMismatchError(f"Operators live on different graphs ({a.graph.name}, {b.graph.name})")

    @staticmethod
    def add(a: BandOperator, b: BandOperator) -> BandOperator:
        OperatorService._check_same_graph(a, b)
        grouped: Dict[Cell, List[CoefficientField]] = defaultdict(list)
        for operator in (a, b):
            for delta, field in operator.terms.items():
                grouped[delta].append(field)
        return make_operator(a.graph, {delta: sum_fields(fields) for delta, fields in grouped.items()})

    @staticmethod
    def scale(operator: BandOperator, factor: complex) -> BandOperator:
        return make_operator(
            operator.graph, {delta: scaled_field(field, factor) for delta, field in operator.terms.items()}
        )

    @staticmethod
    def shift_conjugate(operator: BandOperator, alpha: Cell) -> BandOperator:
        """T_α^{-1} A T_α: every coefficient field becomes β ↦ C(β + α)."""
        alpha = tuple(alpha)
        return make_operator(
            operator.graph, {delta: field.translated(alpha) for delta, field in operator.terms.items()}
        )

    @staticmethod
    def compose(a: BandOperator, b: BandOperator) -> BandOperator:
        """A∘B: term γ collects C^A_δ(α) C^B_ε(α + δ) over δ + ε = γ."""
        OperatorService._check_same_graph(a, b)
        grouped: Dict[Cell, List[CoefficientField]] = defaultdict(list)
        for delta, left in a.terms.items():
            for eps, right in b.terms.items():
                grouped[add_cells(delta, eps)].append(product_field(left, right, delta))
        return make_operator(a.graph, {gamma: sum_fields(fields) for gamma, fields in grouped.items()})

    @staticmethod
    def adjoint(operator: BandOperator) -> BandOperator:
        """A*: term at -d is α ↦ C_d(α - d)^H."""
        return make_operator(
            operator.graph,
            {neg_cell(d): adjoint_field(field, neg_cell(d)) for d, field in operator.terms.items()},
        )

    # -------------------------------------------------------------------------
    # Predicates
    # -------------------------------------------------------------------------

    @staticmethod
    def is_self_adjoint(operator: BandOperator, sample_radius: Optional[int] = None, tol: float = 1e-12) -> bool:
        """Compare A with A* coefficientwise on the sample window."""
        adjoint = OperatorService.adjoint(operator)
        shifts = set(operator.terms) | set(adjoint.terms)
        if operator.is_periodic:
            cells = [operator.graph.origin]
        else:
            cells = window_cells(operator.graph.n, config.sample_radius if sample_radius is None else sample_radius)
        for delta in shifts:
            for cell in cells:
                diff = operator.coefficient(delta, cell) - adjoint.coefficient(delta, cell)
                if np.abs(diff).max(initial=0.0) > tol:
                    return False
        return True

    # -------------------------------------------------------------------------
    # Potential files
    # -------------------------------------------------------------------------

    @staticmethod
    def parse_potential(data: Mapping, graph: PeriodicGraph) -> CoefficientField:
        """
        Decode a potential description into a diagonal coefficient field.

        Keys (any combination, parts are summed):
            periodic: per-orbit values
            table: {"default": value or per-orbit values, "entries": [[j, [α...], value], ...]}
            rule: {"name": one of POTENTIAL_RULES, ...parameters}
            limits: declared partial limits [{"direction": [...], "values": [...]}, ...] (needs rule)
            directions: extra ray directions for limit detection (needs rule)
        """
        if not isinstance(data, Mapping):
            raise PotentialFormatError("Potential description must be an object")
        unknown = set(data) - POTENTIAL_FILE_KEYS
        if unknown:
            raise PotentialFormatError(f"Unknown keys in potential description: {sorted(unknown)}")
        size, n = graph.num_orbits, graph.n
        parts: List[CoefficientField] = []

        if "periodic" in data:
            values = data["periodic"]
            if not isinstance(values, (list, tuple)) or len(values) != size:
                raise PotentialFormatError(f"'periodic' needs {size} values")
            parts.append(ConstantField(np.diag([complex(v) for v in values])))

        if "table" in data:
            parts.append(OperatorService._parse_table(data["table"], graph))

        if "rule" in data:
            parts.append(OperatorService._parse_rule(data, graph))
        elif "limits" in data or "directions" in data:
            raise PotentialFormatError("'limits' and 'directions' require a 'rule'")

        if not parts:
            parts.append(ConstantField(np.zeros((size, size))))
        field = sum_fields(parts)
        logger.debug("Potential parsed", parts=len(parts), orbits=size, rank=n)
        return field

    @staticmethod
    def _parse_table(table: Mapping, graph: PeriodicGraph) -> TableField:
        size, n = graph.num_orbits, graph.n
        if not isinstance(table, Mapping) or set(table) - {"default", "entries"}:
            raise PotentialFormatError("'table' accepts only 'default' and 'entries'")
        default = table.get("default", 0.0)
        if not isinstance(default, (list, tuple)):
            default = [default] * size
        if len(default) != size:
            raise PotentialFormatError(f"Table default needs {size} values")
        base = np.diag([complex(v) for v in default])
        entries: Dict[Cell, np.ndarray] = {}
        for raw in table.get("entries", []):
            try:
                j, cell, value = raw
                j = int(j)
                cell = tuple(int(c) for c in (cell if isinstance(cell, (list, tuple)) else [cell]))
            except (TypeError, ValueError) as e:
                raise PotentialFormatError(f"Malformed table entry {raw!r}") from e
            if not 1 <= j <= size or len(cell) != n:
                raise PotentialFormatError(f"Table entry {raw!r} is outside the graph")
            matrix = entries.setdefault(cell, base.copy())
            matrix[j - 1, j - 1] = complex(value)
        return TableField(entries, base)

    @staticmethod
    def _parse_rule(data: Mapping, graph: PeriodicGraph) -> SOPotential:
        size, n = graph.num_orbits, graph.n
        params = dict(data["rule"])
        name = params.pop("name", None)
        if name not in POTENTIAL_RULES:
            raise PotentialFormatError(f"Unknown rule '{name}', expected one of {sorted(POTENTIAL_RULES)}")
        rule, bound = POTENTIAL_RULES[name](params, n, size)

        limits = []
        for raw in data.get("limits", []):
            try:
                direction = tuple(int(c) for c in raw["direction"])
                values = tuple(float(v) for v in raw["values"])
            except (KeyError, TypeError, ValueError) as e:
                raise PotentialFormatError(f"Malformed declared limit {raw!r}") from e
            if len(direction) != n or len(values) != size or not any(direction):
                raise PotentialFormatError(f"Declared limit {raw!r} does not fit the graph")
            limits.append(DeclaredLimit(direction, values))

        directions = []
        for raw in data.get("directions", []):
            direction = tuple(int(c) for c in raw)
            if len(direction) != n or not any(direction):
                raise PotentialFormatError(f"Direction {raw!r} does not fit the graph")
            directions.append(direction)

        return SOPotential(
            rule=rule,
            size=size,
            bound=bound,
            name=name,
            params=params,
            declared_limits=tuple(limits),
            directions=tuple(directions),
        )

    @staticmethod
    def load_potential(path: Union[str, Path], graph: PeriodicGraph) -> CoefficientField:
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise PotentialFormatError(f"{path}: invalid JSON ({e})") from e
        except OSError as e:
            raise PotentialFormatError(f"{path}: cannot read ({e})") from e
        logger.info("Potential file loaded", path=str(path))
        return OperatorService.parse_potential(data, graph)
