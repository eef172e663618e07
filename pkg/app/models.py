"""Domain types: periodic graphs, coefficient fields, band operators, symbols."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Dict, Iterable, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from app.utils.intervals import IntervalUnion

Cell = Tuple[int, ...]


def add_cells(a: Cell, b: Cell) -> Cell:
    return tuple(x + y for x, y in zip(a, b))


def sub_cells(a: Cell, b: Cell) -> Cell:
    return tuple(x - y for x, y in zip(a, b))


def neg_cell(a: Cell) -> Cell:
    return tuple(-x for x in a)


def frozen_matrix(matrix) -> np.ndarray:
    """Complex copy of ``matrix`` that cannot be written to."""
    result = np.array(matrix, dtype=np.complex128)
    result.setflags(write=False)
    return result


# =============================================================================
# GRAPHS
# =============================================================================


class Vertex(NamedTuple):
    """Vertex α·x_j of a periodic graph, stored as (orbit j, cell α); orbits count from 1."""

    orbit: int
    cell: Cell


class Edge(NamedTuple):
    """Stencil descriptor: (source, α) ~ (target, α + offset) for every cell α."""

    source: int
    target: int
    offset: Cell

    def reversed(self) -> "Edge":
        return Edge(self.target, self.source, neg_cell(self.offset))


@dataclass(frozen=True)
class PeriodicGraph:
    """Z^n-periodic graph given by a fundamental cell of orbits and an edge stencil."""

    n: int
    num_orbits: int
    stencil: Tuple[Edge, ...]
    labels: Tuple[str, ...] = ()
    name: str = "custom"

    @cached_property
    def degrees(self) -> Tuple[int, ...]:
        """m(x_j) for every orbit j."""
        counts = [0] * self.num_orbits
        for edge in self.stencil:
            counts[edge.source - 1] += 1
        return tuple(counts)

    @cached_property
    def outgoing(self) -> Tuple[Tuple[Edge, ...], ...]:
        """Stencil edges grouped by source orbit (index orbit - 1)."""
        groups: list = [[] for _ in range(self.num_orbits)]
        for edge in self.stencil:
            groups[edge.source - 1].append(edge)
        return tuple(tuple(group) for group in groups)

    @property
    def origin(self) -> Cell:
        return (0,) * self.n

    def act(self, alpha: Cell, vertex: Vertex) -> Vertex:
        """Group action α·x."""
        return Vertex(vertex.orbit, add_cells(vertex.cell, alpha))

    def neighbours(self, vertex: Vertex) -> Tuple[Vertex, ...]:
        return tuple(
            Vertex(edge.target, add_cells(vertex.cell, edge.offset)) for edge in self.outgoing[vertex.orbit - 1]
        )

    def orbit_label(self, orbit: int) -> str:
        if self.labels:
            return self.labels[orbit - 1]
        return f"x{orbit}"


# =============================================================================
# COEFFICIENT FIELDS
# =============================================================================


class CoefficientField(ABC):
    """Bounded assignment Z^n -> N×N complex matrices."""

    size: int

    @abstractmethod
    def at(self, cell: Cell) -> np.ndarray:
        """Coefficient matrix at ``cell``."""

    @abstractmethod
    def translated(self, alpha: Cell) -> "CoefficientField":
        """Field β ↦ self.at(β + α)."""

    @property
    def is_constant(self) -> bool:
        return False

    def declared_bound(self) -> Optional[float]:
        """Declared sup of entry moduli, None when nothing is declared."""
        return None

    def is_diagonal_at(self, cell: Cell) -> bool:
        matrix = self.at(cell)
        return bool(np.all(matrix[~np.eye(self.size, dtype=bool)] == 0))


@dataclass(frozen=True, eq=False)
class ConstantField(CoefficientField):
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", frozen_matrix(np.atleast_2d(self.matrix)))

    @property
    def size(self) -> int:  # type: ignore[override]
        return self.matrix.shape[0]

    def at(self, cell: Cell) -> np.ndarray:
        return self.matrix

    def translated(self, alpha: Cell) -> "ConstantField":
        return self

    @property
    def is_constant(self) -> bool:
        return True

    def declared_bound(self) -> Optional[float]:
        return float(np.abs(self.matrix).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class TableField(CoefficientField):
    """Finite table of cell values on top of a constant default."""

    entries: Mapping[Cell, np.ndarray]
    default: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "default", frozen_matrix(np.atleast_2d(self.default)))
        object.__setattr__(
            self, "entries", {tuple(cell): frozen_matrix(np.atleast_2d(m)) for cell, m in self.entries.items()}
        )

    @property
    def size(self) -> int:  # type: ignore[override]
        return self.default.shape[0]

    def at(self, cell: Cell) -> np.ndarray:
        return self.entries.get(tuple(cell), self.default)

    def translated(self, alpha: Cell) -> "TableField":
        return TableField({sub_cells(cell, alpha): m for cell, m in self.entries.items()}, self.default)

    def declared_bound(self) -> Optional[float]:
        values = [np.abs(self.default).max(initial=0.0)]
        values.extend(np.abs(m).max(initial=0.0) for m in self.entries.values())
        return float(max(values))


@dataclass(frozen=True, eq=False)
class RuleField(CoefficientField):
    """Closed-form rule ``cell -> matrix`` with a declared bound on entry moduli."""

    rule: Callable[[Cell], np.ndarray]
    size: int  # type: ignore[misc]
    bound: float
    offset: Optional[Cell] = None
    name: str = "rule"
    params: Mapping[str, object] = field(default_factory=dict)

    def at(self, cell: Cell) -> np.ndarray:
        if self.offset is not None:
            cell = add_cells(cell, self.offset)
        return np.asarray(self.rule(tuple(cell)), dtype=np.complex128).reshape(self.size, self.size)

    def translated(self, alpha: Cell) -> "RuleField":
        offset = alpha if self.offset is None else add_cells(self.offset, alpha)
        return replace(self, offset=tuple(offset))

    def declared_bound(self) -> Optional[float]:
        return self.bound


class DeclaredLimit(NamedTuple):
    """Partial limit of a potential along the ray m·direction, one value per orbit."""

    direction: Cell
    values: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class SOPotential(RuleField):
    """Slowly oscillating diagonal potential with optional declared partial limits."""

    declared_limits: Tuple[DeclaredLimit, ...] = ()
    directions: Tuple[Cell, ...] = ()

    def limit_for(self, direction: Cell) -> Optional[DeclaredLimit]:
        for limit in self.declared_limits:
            if same_ray(limit.direction, direction):
                return limit
        return None


def same_ray(a: Cell, b: Cell) -> bool:
    """True when ``a`` and ``b`` are positive multiples of each other."""
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        return False
    return bool(np.allclose(va / na, vb / nb, atol=1e-12))


@dataclass(frozen=True, eq=False)
class SumField(CoefficientField):
    parts: Tuple[CoefficientField, ...]

    @property
    def size(self) -> int:  # type: ignore[override]
        return self.parts[0].size

    def at(self, cell: Cell) -> np.ndarray:
        return sum((part.at(cell) for part in self.parts[1:]), self.parts[0].at(cell))

    def translated(self, alpha: Cell) -> "SumField":
        return SumField(tuple(part.translated(alpha) for part in self.parts))

    def declared_bound(self) -> Optional[float]:
        bounds = [part.declared_bound() for part in self.parts]
        return None if any(b is None for b in bounds) else float(sum(bounds))  # type: ignore[arg-type]


@dataclass(frozen=True, eq=False)
class ScaledField(CoefficientField):
    inner: CoefficientField
    factor: complex

    @property
    def size(self) -> int:  # type: ignore[override]
        return self.inner.size

    def at(self, cell: Cell) -> np.ndarray:
        return self.factor * self.inner.at(cell)

    def translated(self, alpha: Cell) -> "ScaledField":
        return ScaledField(self.inner.translated(alpha), self.factor)

    def declared_bound(self) -> Optional[float]:
        bound = self.inner.declared_bound()
        return None if bound is None else abs(self.factor) * bound


@dataclass(frozen=True, eq=False)
class ProductField(CoefficientField):
    """α ↦ left(α) · right(α + shift): the coefficient produced by composing two shift terms."""

    left: CoefficientField
    right: CoefficientField
    shift: Cell

    @property
    def size(self) -> int:  # type: ignore[override]
        return self.left.size

    def at(self, cell: Cell) -> np.ndarray:
        return self.left.at(cell) @ self.right.at(add_cells(cell, self.shift))

    def translated(self, alpha: Cell) -> "ProductField":
        return ProductField(self.left.translated(alpha), self.right.translated(alpha), self.shift)

    def declared_bound(self) -> Optional[float]:
        left, right = self.left.declared_bound(), self.right.declared_bound()
        if left is None or right is None:
            return None
        return self.size * left * right


@dataclass(frozen=True, eq=False)
class AdjointField(CoefficientField):
    """α ↦ inner(α + shift)^H: the adjoint's coefficient at shift -shift."""

    inner: CoefficientField
    shift: Cell

    @property
    def size(self) -> int:  # type: ignore[override]
        return self.inner.size

    def at(self, cell: Cell) -> np.ndarray:
        return self.inner.at(add_cells(cell, self.shift)).conj().T

    def translated(self, alpha: Cell) -> "AdjointField":
        return AdjointField(self.inner.translated(alpha), self.shift)

    def declared_bound(self) -> Optional[float]:
        return self.inner.declared_bound()


# =============================================================================
# OPERATORS
# =============================================================================


@dataclass(frozen=True, eq=False)
class BandOperator:
    """Finite sum Σ_δ C_δ V_δ: (Au)(j, α) = Σ_δ Σ_k C_δ(α)[j, k] u(k, α + δ)."""

    graph: PeriodicGraph
    terms: Mapping[Cell, CoefficientField]

    def __post_init__(self):
        ordered: Dict[Cell, CoefficientField] = {tuple(d): self.terms[d] for d in sorted(self.terms)}
        object.__setattr__(self, "terms", ordered)

    @property
    def size(self) -> int:
        return self.graph.num_orbits

    @property
    def shifts(self) -> Tuple[Cell, ...]:
        return tuple(self.terms)

    @property
    def band_width(self) -> int:
        """max |δ|_∞ over the shift terms."""
        return max((max((abs(c) for c in d), default=0) for d in self.terms), default=0)

    @property
    def is_periodic(self) -> bool:
        return all(term.is_constant for term in self.terms.values())

    def coefficient(self, delta: Cell, cell: Cell) -> np.ndarray:
        term = self.terms.get(tuple(delta))
        if term is None:
            return np.zeros((self.size, self.size), dtype=np.complex128)
        return term.at(cell)


@dataclass(frozen=True, eq=False)
class PeriodicBandOperator(BandOperator):
    """Band operator whose every shift coefficient is constant; commutes with all shifts."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_periodic:
            raise TypeError("PeriodicBandOperator requires constant coefficients")

    def matrix(self, delta: Cell) -> np.ndarray:
        """r_A at shift ``delta``."""
        return self.coefficient(delta, self.graph.origin)


# =============================================================================
# SYMBOLS AND CURVES
# =============================================================================


@dataclass(frozen=True, eq=False)
class Symbol:
    """Matrix trigonometric polynomial σ(t) = Σ_β r(β) t^β on the n-torus."""

    size: int
    n: int
    terms: Mapping[Cell, np.ndarray]

    def __post_init__(self):
        ordered = {tuple(b): frozen_matrix(self.terms[b]) for b in sorted(self.terms)}
        object.__setattr__(self, "terms", ordered)

    @cached_property
    def exponents(self) -> np.ndarray:
        """(T, n) integer array of the exponents β."""
        if not self.terms:
            return np.zeros((0, self.n), dtype=np.int64)
        return np.array(list(self.terms), dtype=np.int64).reshape(len(self.terms), self.n)

    @cached_property
    def stack(self) -> np.ndarray:
        """(T, N, N) stack of the coefficient matrices r(β)."""
        if not self.terms:
            return np.zeros((0, self.size, self.size), dtype=np.complex128)
        return np.stack(list(self.terms.values()))


class LipschitzConstants(NamedTuple):
    """Constants of a symbol used to bound eigenvalue variation over a box."""

    per_axis: np.ndarray  # L_i = Σ ‖r(β)‖ |β_i|
    second_order: float  # H = Σ ‖r(β)‖ |β|_1^2
    total_norm: float  # S = Σ ‖r(β)‖, bounds ‖σ(t)‖ on the torus


class InvertibilityResult(NamedTuple):
    invertible: bool
    min_abs_det: float  # smallest |det σ| seen on evaluated torus points
    witness: Optional[Tuple[float, ...]]  # angle with (numerically) singular symbol


@dataclass(frozen=True, eq=False)
class DispersionCurves:
    """Eigenvalues λ^j(t) of the symbol on a uniform M^n grid of angles."""

    grid_size: int
    angles: np.ndarray  # (P, n)
    values: np.ndarray  # (P, N) complex, column j is branch j
    hermitian: bool
    matching: str  # "ascending" or "nearest"


# =============================================================================
# FINITE SECTIONS
# =============================================================================


@dataclass(frozen=True, eq=False)
class WindowMatrix:
    """Dense truncation of a band operator to a finite vertex window."""

    index: Tuple[Vertex, ...]
    matrix: np.ndarray
    radius: int
    kind: str  # "box" (|cell|_∞ ≤ R) or "ball" (ρ ≤ R)

    @cached_property
    def position(self) -> Dict[Vertex, int]:
        return {vertex: row for row, vertex in enumerate(self.index)}

    @property
    def rows(self) -> int:
        return len(self.index)


# =============================================================================
# LIMIT OPERATORS
# =============================================================================


@dataclass(frozen=True, eq=False)
class LimitMember:
    operator: PeriodicBandOperator
    provenance: Tuple[str, ...]


@dataclass(frozen=True, eq=False)
class LimitFamily:
    """Finite representation of the operator spectrum op(A)."""

    members: Tuple[LimitMember, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("LimitFamily must not be empty")

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def operators(self) -> Tuple[PeriodicBandOperator, ...]:
        return tuple(member.operator for member in self.members)


@dataclass(frozen=True, eq=False)
class LimitReport:
    """Limit family with per-member spectra; ``spectrum`` is None when some member is not self-adjoint."""

    family: LimitFamily
    member_spectra: Tuple[Union[IntervalUnion, DispersionCurves], ...]
    spectrum: Optional[IntervalUnion]
    gaps: Tuple[Tuple[float, float], ...] = ()


class FredholmResult(NamedTuple):
    fredholm: bool
    failing_member: Optional[int]  # index into the limit family
    witness: Optional[Tuple[float, ...]]
    min_abs_det: float


# =============================================================================
# MULTIPARTICLE
# =============================================================================


@dataclass(frozen=True, eq=False)
class DecayingPotential:
    """Radial potential W(x) = w(ρ(x, anchor)) with w(z) -> 0."""

    rule: Callable[[float], float]
    anchor: Vertex
    support_radius: float  # |w(z)| < envelope_eps beyond this radius
    name: str = "zero"
    params: Tuple[float, ...] = ()
    envelope_eps: float = 1e-14

    def __call__(self, z: float) -> float:
        return float(self.rule(z))

    def values_on(self, distances: Iterable[int]) -> np.ndarray:
        return np.array([self(z) for z in distances], dtype=float)

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"


class DiscreteEigenvalue(NamedTuple):
    """Finite-section eigenvalue outside the free spectrum, with its stability certificate."""

    value: float
    drift: float  # |λ(R_last) - λ(R_prev)|
    radius: int  # last window radius of the schedule


@dataclass(frozen=True, eq=False)
class ChannelSpectrum:
    """sp H_j = S + (S ∪ discrete_j) together with its Rayleigh enclosure."""

    discrete: Tuple[DiscreteEigenvalue, ...]
    spectrum: IntervalUnion
    inner: IntervalUnion  # 2S
    outer: IntervalUnion  # 2S + [inf W_j, sup W_j]


@dataclass(frozen=True, eq=False)
class ThreeParticleReport:
    free_bands: IntervalUnion  # S = sp Δ_Γ
    channels: Tuple[ChannelSpectrum, ChannelSpectrum]
    interaction_inner: IntervalUnion
    interaction_outer: IntervalUnion
    inner: IntervalUnion
    outer: IntervalUnion
    sanity_bound: Tuple[float, float]
    within_bound: bool
