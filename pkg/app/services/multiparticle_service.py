"""Multiparticle service - three-particle essential spectrum from one-particle spectra."""

import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.config import config
from app.constants import DEFAULT_DISTANCE_CAP, DEFAULT_R_SCHEDULE
from app.exceptions import NotHermitianError, NotStabilizedError, PotentialFormatError
from app.models import (
    BandOperator,
    ChannelSpectrum,
    DecayingPotential,
    DiscreteEigenvalue,
    PeriodicGraph,
    ThreeParticleReport,
    Vertex,
)
from app.services.finite_section_service import FiniteSectionService
from app.services.graph_service import GraphService
from app.services.symbol_service import SymbolService
from app.utils.intervals import Interval, IntervalUnion

logger = structlog.get_logger()

ENVELOPE_EPS = 1e-14


def _delta_rule(params: Sequence[float]) -> Tuple[Callable[[float], float], float]:
    """a·[z = 0]."""
    (amplitude,) = params
    return (lambda z: amplitude if z == 0 else 0.0), 0.0


def _exponential_rule(params: Sequence[float]) -> Tuple[Callable[[float], float], float]:
    """a·exp(-z / length)."""
    amplitude, length = params
    if length <= 0:
        raise PotentialFormatError("exponential decay length must be positive")
    support = length * math.log(abs(amplitude) / ENVELOPE_EPS) if abs(amplitude) > ENVELOPE_EPS else 0.0
    return (lambda z: amplitude * math.exp(-z / length)), support


def _power_rule(params: Sequence[float]) -> Tuple[Callable[[float], float], float]:
    """a·(1 + z)^(-p)."""
    amplitude, power = params
    if power <= 0:
        raise PotentialFormatError("power decay exponent must be positive")
    support = (abs(amplitude) / ENVELOPE_EPS) ** (1.0 / power) - 1.0 if abs(amplitude) > ENVELOPE_EPS else 0.0
    return (lambda z: amplitude * (1.0 + z) ** (-power)), max(support, 0.0)


def _zero_rule(params: Sequence[float]) -> Tuple[Callable[[float], float], float]:
    return (lambda z: 0.0), 0.0


RADIAL_RULES: Dict[str, Tuple[int, Callable]] = {
    "delta": (1, _delta_rule),
    "exponential": (2, _exponential_rule),
    "power": (2, _power_rule),
    "zero": (0, _zero_rule),
}


class MultiparticleService:
    """Service for the three-particle assembly on a periodic graph."""

    @staticmethod
    def radial_potential(name: str, params: Sequence[float], anchor: Vertex) -> DecayingPotential:
        """
        Build W(x) = w(ρ(x, anchor)) from a named radial rule.

        Raises:
            PotentialFormatError: unknown rule or wrong parameter count
        """
        if name not in RADIAL_RULES:
            raise PotentialFormatError(f"Unknown radial rule '{name}', expected one of {sorted(RADIAL_RULES)}")
        arity, factory = RADIAL_RULES[name]
        if len(params) != arity:
            raise PotentialFormatError(f"Radial rule '{name}' takes {arity} parameter(s), got {len(params)}")
        rule, support = factory([float(p) for p in params])
        return DecayingPotential(
            rule=rule,
            anchor=anchor,
            support_radius=support,
            name=name,
            params=tuple(float(p) for p in params),
            envelope_eps=ENVELOPE_EPS,
        )

    @staticmethod
    def parse_radial(text: str, anchor: Vertex) -> DecayingPotential:
        """
        Parse 'name:p1,p2,...'.

        Examples:
            delta:-0.75
            exponential:-1,2
            zero
        """
        name, _, rest = text.partition(":")
        try:
            params = [float(p) for p in rest.split(",")] if rest.strip() else []
        except ValueError as e:
            raise PotentialFormatError(f"Malformed radial potential '{text}'") from e
        return MultiparticleService.radial_potential(name.strip(), params, anchor)

    @staticmethod
    def potential_range(potential: DecayingPotential) -> Interval:
        """[inf W, sup W] over integer distances, including the limit value 0."""
        if potential.is_zero:
            return 0.0, 0.0
        top = int(min(math.ceil(potential.support_radius), DEFAULT_DISTANCE_CAP))
        values = potential.values_on(range(top + 1))
        return min(0.0, float(values.min())), max(0.0, float(values.max()))

    @staticmethod
    def minkowski_sum(first: IntervalUnion, second: IntervalUnion) -> IntervalUnion:
        """E + F = {e + f}; empty when either operand is empty."""
        return first.minkowski_sum(second)

    @staticmethod
    def free_bands(graph: PeriodicGraph, tol: Optional[float] = None) -> IntervalUnion:
        """S = sp Δ_Γ."""
        return SymbolService.selfadjoint_bands(SymbolService.build_symbol(GraphService.laplacian(graph)), tol=tol)

    @staticmethod
    def default_schedule(graph: PeriodicGraph, max_rows: Optional[int] = None) -> Tuple[int, ...]:
        """
        DEFAULT_R_SCHEDULE, scaled down until the largest ball fits the row limit.

        A ball of radius R lies in the cell box of radius reach·R, where reach is the
        largest |offset|_∞ in the stencil, so it has at most N·(2·reach·R + 1)^n rows.
        """
        max_rows = config.max_window_rows if max_rows is None else max_rows
        reach = max((max(abs(c) for c in edge.offset) for edge in graph.stencil), default=1) or 1
        top = DEFAULT_R_SCHEDULE[-1]
        radius = top
        while radius > 2 and graph.num_orbits * (2 * reach * radius + 1) ** graph.n > max_rows:
            radius -= 1
        if radius == top:
            return DEFAULT_R_SCHEDULE
        radii = sorted({max(1, r * radius // top) for r in DEFAULT_R_SCHEDULE})
        if len(radii) < 2:
            radii = [radius - 1, radius]
        logger.info("Window schedule scaled to the row limit", schedule=radii, max_rows=max_rows)
        return tuple(radii)

    @staticmethod
    def _ball_spectrum(graph: PeriodicGraph, potential: DecayingPotential, radius: int) -> np.ndarray:
        ball = GraphService.ball(graph, potential.anchor, radius)
        window = FiniteSectionService.truncate_ball(GraphService.laplacian(graph), potential.anchor, radius)
        matrix = window.matrix + np.diag(potential.values_on(distance for _, distance in ball))
        return FiniteSectionService.window_eigenvalues(matrix, hermitian=True)

    @staticmethod
    def discrete_eigenvalues(
        graph: PeriodicGraph,
        potential: DecayingPotential,
        schedule: Optional[Sequence[int]] = None,
        tol: Optional[float] = None,
        free_bands: Optional[IntervalUnion] = None,
    ) -> List[DiscreteEigenvalue]:
        """
        Eigenvalues of Δ_Γ + W outside sp Δ_Γ from ball finite sections.

        A candidate is kept when it lies outside S ⊕ [-tol, tol] and moves by
        less than tol between the last two window radii.

        Raises:
            NotStabilizedError: candidate count or positions differ at the last two radii
        """
        tol = config.tol if tol is None else tol
        schedule = MultiparticleService.default_schedule(graph) if schedule is None else tuple(schedule)
        if len(schedule) < 2 or any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise ValueError(f"Window schedule must be increasing with at least two radii, got {list(schedule)}")
        if potential.is_zero:
            return []
        bands = MultiparticleService.free_bands(graph, tol) if free_bands is None else free_bands
        inflated = bands.inflated(tol)

        candidates: List[np.ndarray] = []
        for radius in schedule[-2:]:
            values = MultiparticleService._ball_spectrum(graph, potential, radius)
            outside = np.array([v for v in values if not inflated.contains(v)])
            candidates.append(outside)
            logger.debug("Ball section solved", radius=radius, candidates=len(outside))

        previous, last = candidates
        if len(previous) != len(last):
            raise NotStabilizedError(
                f"Candidate count changed from {len(previous)} to {len(last)} between R={schedule[-2]} "
                f"and R={schedule[-1]}",
                candidates=tuple(float(v) for v in last),
            )
        drift = np.abs(last - previous)
        unstable = [float(v) for v, d in zip(last, drift) if d >= tol]
        if unstable:
            raise NotStabilizedError(
                f"Eigenvalues {unstable} drift by more than {tol:g} at R={schedule[-1]}", candidates=tuple(unstable)
            )
        return [DiscreteEigenvalue(float(v), float(d), schedule[-1]) for v, d in zip(last, drift)]

    @staticmethod
    def _channel(
        bands: IntervalUnion, discrete: Sequence[DiscreteEigenvalue], potential_range: Interval
    ) -> ChannelSpectrum:
        factor = bands.union(*(IntervalUnion.point(d.value) for d in discrete))
        inner = bands + bands
        outer = inner + IntervalUnion.from_intervals([potential_range])
        return ChannelSpectrum(tuple(discrete), bands + factor, inner, outer)

    @staticmethod
    def three_particle_essential_spectrum(
        graph: PeriodicGraph,
        w1: DecayingPotential,
        w2: DecayingPotential,
        w12: DecayingPotential,
        tol: Optional[float] = None,
        schedule: Optional[Sequence[int]] = None,
    ) -> ThreeParticleReport:
        """
        sp_ess H = sp H_1 ∪ sp H_2 ∪ sp H_12.

        sp H_j = S + sp(Δ_Γ + W_j) with sp(Δ_Γ + W_j) = S ∪ discrete_j. The
        interaction channel is only enclosed: 2S ⊆ sp H_12 ⊆ 2S + [inf W_12, sup W_12].
        """
        tol = config.tol if tol is None else tol
        bands = MultiparticleService.free_bands(graph, tol)
        channels = []
        for potential in (w1, w2):
            discrete = MultiparticleService.discrete_eigenvalues(graph, potential, schedule, tol, bands)
            channels.append(
                MultiparticleService._channel(bands, discrete, MultiparticleService.potential_range(potential))
            )

        interaction_inner = bands + bands
        interaction_outer = interaction_inner + IntervalUnion.from_intervals(
            [MultiparticleService.potential_range(w12)]
        )
        inner = channels[0].spectrum.union(channels[1].spectrum, interaction_inner)
        outer = channels[0].spectrum.union(channels[1].spectrum, interaction_outer)

        lows, highs = zip(*(MultiparticleService.potential_range(w) for w in (w1, w2, w12)))
        bound = (sum(lows) + 2.0 * bands.lower, sum(highs) + 2.0 * bands.upper)
        within = IntervalUnion.from_intervals([bound]).contains_union(outer, slack=tol)
        if not within:
            logger.warning("Three-particle spectrum exceeds sanity bound", bound=bound)
        logger.info("Three-particle spectrum assembled", inner=len(inner), outer=len(outer))
        return ThreeParticleReport(
            free_bands=bands,
            channels=(channels[0], channels[1]),
            interaction_inner=interaction_inner,
            interaction_outer=interaction_outer,
            inner=inner,
            outer=outer,
            sanity_bound=bound,
            within_bound=within,
        )

    @staticmethod
    def rayleigh_bounds(operator: BandOperator, radius: int, max_rows: Optional[int] = None) -> Interval:
        """
        [min, max] eigenvalue of the box truncation: an inner estimate of [inf sp A, sup sp A].

        Raises:
            NotHermitianError: the truncation is not Hermitian
        """
        window = FiniteSectionService.truncate(operator, radius, max_rows)
        if not FiniteSectionService.is_hermitian(window):
            raise NotHermitianError("Rayleigh bounds need a self-adjoint operator")
        values = FiniteSectionService.window_eigenvalues(window.matrix, hermitian=True)
        return float(values[0]), float(values[-1])
