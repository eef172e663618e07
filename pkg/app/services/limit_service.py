"""Limit service - limit operators, essential spectra, gaps and Fredholm checks."""

from functools import singledispatch
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from app.config import config
from app.constants import (
    LIMIT_KEY_DECIMALS,
    RAY_MAX_SAMPLES,
    SO_CHECK_EXPONENTS,
    SO_CHECK_TOL,
)
from app.exceptions import NoConvergenceDetectedError, NotSOClassError
from app.models import (
    AdjointField,
    BandOperator,
    Cell,
    CoefficientField,
    ConstantField,
    DecayingPotential,
    DispersionCurves,
    FredholmResult,
    LimitFamily,
    LimitMember,
    LimitReport,
    PeriodicBandOperator,
    PeriodicGraph,
    ProductField,
    RuleField,
    ScaledField,
    SOPotential,
    SumField,
    TableField,
    add_cells,
    same_ray,
)
from app.services.operator_service import OperatorService
from app.services.symbol_service import SymbolService
from app.utils.formatters import format_cell
from app.utils.intervals import Interval, IntervalUnion

logger = structlog.get_logger()

Spectrum = Union[IntervalUnion, Tuple[DispersionCurves, ...]]


def unit_directions(n: int) -> List[Cell]:
    """±e_1, ..., ±e_n."""
    result = []
    for i in range(n):
        unit = tuple(1 if c == i else 0 for c in range(n))
        result.append(unit)
        result.append(tuple(-c for c in unit))
    return result


def ray_cell(direction: Cell, m: int) -> Cell:
    return tuple(m * c for c in direction)


def sample_ray_limit(field: CoefficientField, direction: Cell, tol: float, run: int) -> np.ndarray:
    """
    Limit of field(m·d) along m = 2^k.

    Converged once ``run`` successive samples differ by less than tol.

    Raises:
        NoConvergenceDetectedError: no stable run within RAY_MAX_SAMPLES samples
    """
    previous = field.at(ray_cell(direction, 1))
    stable = 0
    for k in range(1, RAY_MAX_SAMPLES):
        current = field.at(ray_cell(direction, 2**k))
        if np.abs(current - previous).max(initial=0.0) < tol:
            stable += 1
            if stable >= run:
                return current
        else:
            stable = 0
        previous = current
    raise NoConvergenceDetectedError(
        f"Coefficient does not settle along direction {format_cell(direction)} "
        f"within {RAY_MAX_SAMPLES} samples (tol {tol:g})"
    )


# =============================================================================
# FIELD TRAVERSAL
# =============================================================================


@singledispatch
def field_children(field: CoefficientField) -> Tuple[CoefficientField, ...]:
    return ()


@field_children.register
def _(field: SumField) -> Tuple[CoefficientField, ...]:
    return field.parts


@field_children.register
def _(field: ScaledField) -> Tuple[CoefficientField, ...]:
    return (field.inner,)


@field_children.register
def _(field: ProductField) -> Tuple[CoefficientField, ...]:
    return (field.left, field.right)


@field_children.register
def _(field: AdjointField) -> Tuple[CoefficientField, ...]:
    return (field.inner,)


def field_leaves(field: CoefficientField) -> Iterable[CoefficientField]:
    children = field_children(field)
    if not children:
        yield field
        return
    for child in children:
        yield from field_leaves(child)


@singledispatch
def field_limit(field: CoefficientField, direction: Cell, tol: float, run: int) -> np.ndarray:
    """Limit of the field along the ray m·direction."""
    return sample_ray_limit(field, direction, tol, run)


@field_limit.register
def _(field: ConstantField, direction: Cell, tol: float, run: int) -> np.ndarray:
    return field.matrix


@field_limit.register
def _(field: TableField, direction: Cell, tol: float, run: int) -> np.ndarray:
    # Finitely many entries: every ray eventually sees the default
    return field.default


@field_limit.register
def _(field: SOPotential, direction: Cell, tol: float, run: int) -> np.ndarray:
    declared = field.limit_for(direction)
    if declared is None:
        return sample_ray_limit(field, direction, tol, run)
    matrix = np.diag(np.asarray(declared.values, dtype=np.complex128))
    try:
        sampled = sample_ray_limit(field, direction, tol, run)
    except NoConvergenceDetectedError:
        return matrix
    if np.abs(sampled - matrix).max(initial=0.0) > max(SO_CHECK_TOL, 10 * tol):
        logger.warning(
            "Declared limit disagrees with ray sample",
            direction=list(direction),
            declared=list(declared.values),
            sampled=[complex(z).real for z in np.diag(sampled)],
        )
    return matrix


@field_limit.register
def _(field: SumField, direction: Cell, tol: float, run: int) -> np.ndarray:
    parts = [field_limit(part, direction, tol, run) for part in field.parts]
    return sum(parts[1:], parts[0])


@field_limit.register
def _(field: ScaledField, direction: Cell, tol: float, run: int) -> np.ndarray:
    return field.factor * field_limit(field.inner, direction, tol, run)


@field_limit.register
def _(field: ProductField, direction: Cell, tol: float, run: int) -> np.ndarray:
    return field_limit(field.left, direction, tol, run) @ field_limit(field.right, direction, tol, run)


@field_limit.register
def _(field: AdjointField, direction: Cell, tol: float, run: int) -> np.ndarray:
    return field_limit(field.inner, direction, tol, run).conj().T


class LimitService:
    """Service for limit operators of band operators with periodic, compact and slowly oscillating coefficients."""

    @staticmethod
    def check_slow_oscillation(field: CoefficientField, graph: PeriodicGraph, directions: Sequence[Cell] = ()):
        """
        Check v(α + e_i) - v(α) -> 0 orbitwise far out along every ray.

        Raises:
            NotSOClassError: an increment stays above SO_CHECK_TOL
        """
        rays = unit_directions(graph.n) + [tuple(d) for d in directions]
        units = unit_directions(graph.n)[::2]
        for leaf in field_leaves(field):
            if not isinstance(leaf, RuleField):
                continue
            for direction in rays:
                for k in SO_CHECK_EXPONENTS:
                    cell = ray_cell(direction, 2**k)
                    value = leaf.at(cell)
                    for unit in units:
                        increment = float(np.abs(leaf.at(add_cells(cell, unit)) - value).max(initial=0.0))
                        if increment > SO_CHECK_TOL:
                            raise NotSOClassError(
                                f"Coefficient '{leaf.name}' is not slowly oscillating: increment {increment:.3g} "
                                f"along {format_cell(unit)} at cell 2^{k}·{format_cell(direction)}"
                            )

    @staticmethod
    def _directions(operator: BandOperator, extra: Sequence[Cell]) -> List[Cell]:
        declared: List[Cell] = []
        requested: List[Cell] = [tuple(d) for d in extra]
        for field in operator.terms.values():
            for leaf in field_leaves(field):
                if isinstance(leaf, SOPotential):
                    declared.extend(limit.direction for limit in leaf.declared_limits)
                    requested.extend(leaf.directions)
        candidates = (declared or unit_directions(operator.graph.n)) + requested
        result: List[Cell] = []
        for direction in candidates:
            if not any(same_ray(direction, seen) for seen in result):
                result.append(tuple(direction))
        return result

    @staticmethod
    def limit_family(
        operator: BandOperator,
        directions: Sequence[Cell] = (),
        tol: Optional[float] = None,
        stability_run: Optional[int] = None,
    ) -> LimitFamily:
        """
        Limit operators of A along rays, one periodic member per distinct limit.

        Periodic A is its own family. Tables vanish into their default. Slowly
        oscillating coefficients are replaced by their declared or sampled limits.

        Raises:
            NotSOClassError, NoConvergenceDetectedError
        """
        if operator.is_periodic:
            periodic = PeriodicBandOperator(operator.graph, operator.terms)
            return LimitFamily((LimitMember(periodic, ("periodic",)),))
        tol = config.limit_tol if tol is None else tol
        run = config.stability_run if stability_run is None else stability_run
        rays = LimitService._directions(operator, directions)
        graph = operator.graph

        for field in operator.terms.values():
            LimitService.check_slow_oscillation(field, graph, rays)

        members: Dict[tuple, Tuple[PeriodicBandOperator, List[str]]] = {}
        for direction in rays:
            terms = {}
            for delta, field in operator.terms.items():
                matrix = np.asarray(field_limit(field, direction, tol, run), dtype=np.complex128)
                if np.any(matrix != 0):
                    terms[delta] = ConstantField(matrix)
            limit = PeriodicBandOperator(graph, terms)
            key = tuple(
                (delta, tuple(np.round(field.matrix, LIMIT_KEY_DECIMALS).ravel().tolist()))
                for delta, field in limit.terms.items()
            )
            if key in members:
                members[key][1].append(f"ray {format_cell(direction)}")
            else:
                members[key] = (limit, [f"ray {format_cell(direction)}"])

        family = LimitFamily(tuple(LimitMember(op, tuple(provenance)) for op, provenance in members.values()))
        logger.info("Limit family built", members=len(family), rays=len(rays))
        return family

    @staticmethod
    def member_spectrum(
        member: PeriodicBandOperator, grid_size: Optional[int] = None, tol: Optional[float] = None
    ) -> Union[IntervalUnion, DispersionCurves]:
        symbol = SymbolService.build_symbol(member)
        if SymbolService.is_hermitian(symbol):
            return SymbolService.selfadjoint_bands(symbol, tol=tol, grid_size=grid_size)
        return SymbolService.dispersion_curves(symbol, grid_size=grid_size, hermitian_hint=False)

    @staticmethod
    def report(
        operator: BandOperator,
        grid_size: Optional[int] = None,
        tol: Optional[float] = None,
        directions: Sequence[Cell] = (),
        window: Optional[Interval] = None,
    ) -> LimitReport:
        """Limit family, per-member spectra, their union and (self-adjoint case) gaps in ``window``."""
        tol = config.tol if tol is None else tol
        family = LimitService.limit_family(operator, directions)
        spectra = tuple(LimitService.member_spectrum(member.operator, grid_size, tol) for member in family)
        if not all(isinstance(s, IntervalUnion) for s in spectra):
            return LimitReport(family, spectra, None)
        union = IntervalUnion.empty().union(*spectra, merge_tol=2.0 * tol)  # type: ignore[arg-type]
        gaps: Tuple[Interval, ...] = ()
        if window is not None:
            gaps = tuple(LimitService.gaps(union, *window))
        return LimitReport(family, spectra, union, gaps)

    @staticmethod
    def essential_spectrum(
        operator: BandOperator,
        grid_size: Optional[int] = None,
        tol: Optional[float] = None,
        directions: Sequence[Cell] = (),
    ) -> Spectrum:
        """
        sp_ess A as the union of the limit operators' spectra.

        Returns:
            IntervalUnion when every member is self-adjoint, else the members' dispersion curves
        """
        report = LimitService.report(operator, grid_size, tol, directions)
        if report.spectrum is not None:
            return report.spectrum
        return tuple(
            spectrum
            if isinstance(spectrum, DispersionCurves)
            else SymbolService.dispersion_curves(SymbolService.build_symbol(member.operator), grid_size, True)
            for member, spectrum in zip(report.family, report.member_spectra)
        )

    @staticmethod
    def perturbed_spectrum(
        graph: PeriodicGraph,
        potential: DecayingPotential,
        schedule: Optional[Sequence[int]] = None,
        tol: Optional[float] = None,
    ) -> IntervalUnion:
        """
        sp(Δ_Γ + W) = sp Δ_Γ ∪ {discrete eigenvalues}.

        W decays, so sp_ess(Δ_Γ + W) = sp Δ_Γ; only the isolated eigenvalues are added.
        """
        from app.services.multiparticle_service import MultiparticleService

        bands = MultiparticleService.free_bands(graph, tol)
        discrete = MultiparticleService.discrete_eigenvalues(graph, potential, schedule, tol, bands)
        return bands.union(*(IntervalUnion.point(d.value) for d in discrete))

    @staticmethod
    def gaps(bands: IntervalUnion, lo: float, hi: float) -> List[Interval]:
        """Open gaps between consecutive bands inside [lo, hi]."""
        return bands.gaps(lo, hi)

    @staticmethod
    def fredholm_check(
        operator: BandOperator,
        spectral_parameter: complex,
        tol: Optional[float] = None,
        directions: Sequence[Cell] = (),
        grid_size: Optional[int] = None,
    ) -> FredholmResult:
        """
        A - λI is Fredholm iff det σ_{A_h}(t) - λ has no zero for every limit operator A_h.

        Raises:
            InconclusiveError: some member's determinant test cannot decide
        """
        family = LimitService.limit_family(operator, directions)
        shift = OperatorService.scale(OperatorService.identity(operator.graph), -complex(spectral_parameter))
        smallest = np.inf
        for index, member in enumerate(family):
            shifted = OperatorService.add(member.operator, shift)
            result = SymbolService.is_invertible_symbol(
                SymbolService.build_symbol(shifted), tol=tol, grid_size=grid_size
            )
            smallest = min(smallest, result.min_abs_det)
            if not result.invertible:
                logger.info("Not Fredholm", member=index, witness=result.witness)
                return FredholmResult(False, index, result.witness, result.min_abs_det)
        return FredholmResult(True, None, None, float(smallest))
