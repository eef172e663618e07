"""Tests for app/services/multiparticle_service.py"""

import math

import numpy as np
import pytest

from app.exceptions import NotHermitianError, NotStabilizedError, PotentialFormatError
from app.models import ConstantField, PeriodicBandOperator, Vertex
from app.services.graph_service import GraphService
from app.services.multiparticle_service import MultiparticleService
from app.utils.intervals import IntervalUnion

ORIGIN = Vertex(1, (0,))


@pytest.fixture
def cayley1():
    return GraphService.builtin_graph("cayley", 1)


def radial(text):
    return MultiparticleService.parse_radial(text, ORIGIN)


class TestRadialPotentials:
    """Test radial rule parsing and ranges."""

    def test_delta(self):
        """delta:a is a at distance 0 only."""
        w = radial("delta:-0.75")
        assert w(0) == -0.75
        assert w(1) == 0.0
        assert MultiparticleService.potential_range(w) == (-0.75, 0.0)

    def test_exponential(self):
        """exponential:a,ℓ decays like e^{-z/ℓ}."""
        w = radial("exponential:2,0.5")
        assert w(1) == pytest.approx(2 * math.exp(-2))
        assert MultiparticleService.potential_range(w) == pytest.approx((0.0, 2.0))
        assert w.support_radius == pytest.approx(0.5 * math.log(2 / 1e-14))

    def test_power(self):
        """power:a,p is a(1 + z)^{-p}."""
        w = radial("power:-1,2")
        assert w(3) == pytest.approx(-1 / 16)
        assert MultiparticleService.potential_range(w)[0] == pytest.approx(-1.0)

    def test_zero(self):
        """zero has no parameters and range {0}."""
        w = radial("zero")
        assert w.is_zero
        assert MultiparticleService.potential_range(w) == (0.0, 0.0)

    @pytest.mark.parametrize("text", ["delta", "delta:1,2", "bump:1", "delta:abc", "exponential:1,0"])
    def test_malformed(self, text):
        """Unknown rules, wrong arity and bad numbers are format errors."""
        with pytest.raises(PotentialFormatError):
            radial(text)


class TestMinkowskiSum:
    """Test E + F on interval unions."""

    def test_bands(self):
        """[-1, 1] + [-1, 1] = [-2, 2]."""
        band = IntervalUnion.from_intervals([(-1, 1)])
        assert MultiparticleService.minkowski_sum(band, band) == IntervalUnion.from_intervals([(-2, 2)])

    def test_point_and_band(self):
        """{-1.25} ∪ [-1, 1] shifted by [-1, 1]."""
        band = IntervalUnion.from_intervals([(-1, 1)])
        factor = band.union(IntervalUnion.point(-1.25))
        assert MultiparticleService.minkowski_sum(band, factor) == IntervalUnion.from_intervals([(-2.25, 2)])

    def test_empty(self):
        """Sums with the empty union are empty."""
        band = IntervalUnion.from_intervals([(0, 1)])
        assert MultiparticleService.minkowski_sum(band, IntervalUnion.empty()).is_empty

    def test_laws(self):
        """Commutative and associative on dyadic endpoints."""
        e = IntervalUnion.from_intervals([(0, 0.5), (2, 3)])
        f = IntervalUnion.from_intervals([(-1, -0.75), (4, 4.25)])
        g = IntervalUnion.from_intervals([(0.125, 0.25)])
        assert e + f == f + e
        assert (e + f) + g == e + (f + g)


class TestDiscreteEigenvalues:
    """Test finite-section eigenvalue detection."""

    @pytest.mark.parametrize("coupling", [-0.75, -0.5, 1.0])
    def test_rank_one(self, cayley1, coupling):
        """Δ_Z + c δ_0 has the eigenvalue sign(c)·sqrt(1 + c²)."""
        found = MultiparticleService.discrete_eigenvalues(cayley1, radial(f"delta:{coupling}"), schedule=(50, 100))
        assert len(found) == 1
        assert found[0].value == pytest.approx(math.copysign(math.sqrt(1 + coupling**2), coupling), abs=1e-4)
        assert found[0].drift < 1e-6
        assert found[0].radius == 100

    @pytest.mark.parametrize("strength", [0.25, 0.75, 2.0])
    def test_attractive_rank_one_at_radius_200(self, cayley1, strength):
        """Δ_Z - c δ_0 binds at -sqrt(1 + c²) once the window reaches R = 200."""
        found = MultiparticleService.discrete_eigenvalues(cayley1, radial(f"delta:{-strength}"), schedule=(100, 200))
        assert len(found) == 1
        assert found[0].value == pytest.approx(-math.sqrt(1 + strength**2), abs=1e-4)
        assert found[0].radius == 200

    @pytest.mark.parametrize(
        "builtin,rank,expected",
        [("cayley", 1, (50, 100, 200)), ("honeycomb", 1, (5, 10, 21)), ("cayley", 3, (1, 3, 7))],
    )
    def test_default_schedule(self, builtin, rank, expected):
        """Default radii are scaled until N·(2R + 1)^n fits 4000 rows."""
        graph = GraphService.builtin_graph(builtin, rank)
        assert MultiparticleService.default_schedule(graph, max_rows=4000) == expected

    def test_zero_potential(self, cayley1):
        """Nothing is found without a potential."""
        assert MultiparticleService.discrete_eigenvalues(cayley1, radial("zero")) == []

    def test_bad_schedule(self, cayley1):
        """Schedules need two increasing radii."""
        with pytest.raises(ValueError):
            MultiparticleService.discrete_eigenvalues(cayley1, radial("delta:-1"), schedule=(10,))
        with pytest.raises(ValueError):
            MultiparticleService.discrete_eigenvalues(cayley1, radial("delta:-1"), schedule=(20, 10))

    def test_not_stabilized(self, cayley1):
        """The bound state still moves between R = 2 and R = 4."""
        bands = IntervalUnion.from_intervals([(-1, 1)])
        with pytest.raises(NotStabilizedError) as excinfo:
            MultiparticleService.discrete_eigenvalues(
                cayley1, radial("delta:-0.75"), schedule=(2, 4), tol=1e-9, free_bands=bands
            )
        assert excinfo.value.code == "NotStabilized"


class TestThreeParticle:
    """Test the three-particle essential spectrum."""

    @pytest.fixture
    def report(self, cayley1):
        return MultiparticleService.three_particle_essential_spectrum(
            cayley1, radial("delta:-0.75"), radial("delta:-0.75"), radial("zero"), schedule=(100, 200)
        )

    def test_desk_scale_run(self, report):
        """w1 = w2 = -0.75δ, w12 = 0 gives [-2.25, 2]."""
        assert len(report.inner) == 1
        assert report.inner.lower == pytest.approx(-2.25, abs=1e-3)
        assert report.inner.upper == pytest.approx(2.0, abs=1e-3)
        assert report.outer == report.inner

    def test_channel_eigenvalue(self, report):
        """Each channel carries the bound state -sqrt(1 + 0.75²) = -1.25."""
        for channel in report.channels:
            assert [d.value for d in channel.discrete] == pytest.approx([-1.25], abs=1e-4)

    def test_sanity_bound(self, report):
        """sp_ess H lies inside [m + 2 inf S, M + 2 sup S]."""
        assert report.within_bound
        assert report.sanity_bound[0] == pytest.approx(-3.5, abs=1e-5)
        assert report.sanity_bound[1] == pytest.approx(2.0, abs=1e-5)

    def test_interaction_enclosure(self, cayley1):
        """A repulsive w12 widens only the outer enclosure of H_12."""
        report = MultiparticleService.three_particle_essential_spectrum(
            cayley1, radial("zero"), radial("zero"), radial("delta:0.5"), schedule=(20, 40)
        )
        assert report.interaction_inner.upper == pytest.approx(2.0, abs=1e-5)
        assert report.interaction_outer.upper == pytest.approx(2.5, abs=1e-5)
        assert report.within_bound


class TestRayleighBounds:
    """Test finite-section Rayleigh bounds."""

    def test_cayley(self, cayley1):
        """Truncations of Δ_Z at R = 20 come within 0.02 of ±1."""
        lo, hi = MultiparticleService.rayleigh_bounds(GraphService.laplacian(cayley1), 20)
        assert -1.0 <= lo < -0.98
        assert 0.98 < hi <= 1.0

    @pytest.mark.parametrize("builtin", ["zigzag", "honeycomb"])
    def test_monotone_in_radius(self, builtin):
        """Nested windows widen the bounds: min never rises and max never falls."""
        operator = GraphService.laplacian(GraphService.builtin_graph(builtin))
        bounds = [MultiparticleService.rayleigh_bounds(operator, radius) for radius in range(1, 7)]
        for (lo, hi), (next_lo, next_hi) in zip(bounds, bounds[1:]):
            assert next_lo <= lo + 1e-12
            assert next_hi >= hi - 1e-12

    def test_non_hermitian(self, cayley1):
        """Rayleigh bounds need a self-adjoint operator."""
        shift = PeriodicBandOperator(cayley1, {(1,): ConstantField(np.array([[1.0]]))})
        with pytest.raises(NotHermitianError):
            MultiparticleService.rayleigh_bounds(shift, 5)
