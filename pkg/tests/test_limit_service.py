"""Tests for app/services/limit_service.py"""

import math

import numpy as np
import pytest

from app.exceptions import NoConvergenceDetectedError, NotSOClassError
from app.models import ConstantField, TableField, Vertex
from app.services.graph_service import GraphService
from app.services.limit_service import LimitService, field_leaves, sample_ray_limit, unit_directions
from app.services.multiparticle_service import MultiparticleService
from app.services.operator_service import OperatorService


@pytest.fixture
def zigzag():
    return GraphService.builtin_graph("zigzag")


@pytest.fixture
def cayley1():
    return GraphService.builtin_graph("cayley", 1)


@pytest.fixture
def two_limit_zigzag(zigzag):
    """v → (3, 3) to the right and (1, 1) to the left."""
    potential = OperatorService.parse_potential({"rule": {"name": "ray_limit", "c": [2, 2], "d": [1, 1]}}, zigzag)
    return OperatorService.schrodinger(zigzag, potential)


@pytest.fixture
def decaying_cayley(cayley1):
    potential = OperatorService.parse_potential({"rule": {"name": "decaying", "amplitude": 1.0, "rate": 1.0}}, cayley1)
    return OperatorService.schrodinger(cayley1, potential)


class TestHelpers:
    """Test direction and sampling helpers."""

    def test_unit_directions(self):
        """±e_i in axis order."""
        assert unit_directions(2) == [(1, 0), (-1, 0), (0, 1), (0, -1)]

    def test_sample_ray_limit(self, zigzag):
        """v(m) = 2 + m/(1 + m) tends to 3."""
        field = OperatorService.parse_potential({"rule": {"name": "ray_limit", "c": 2, "d": 1}}, zigzag)
        limit = sample_ray_limit(field, (1,), tol=1e-9, run=8)
        assert np.allclose(limit, np.diag([3.0, 3.0]), atol=1e-8)

    def test_field_leaves(self, zigzag):
        """Sums are flattened into their parts."""
        operator = OperatorService.schrodinger(zigzag, TableField({(0,): np.diag([1.0, 0.0])}, np.zeros((2, 2))))
        kinds = sorted(type(leaf).__name__ for leaf in field_leaves(operator.terms[(0,)]))
        assert kinds == ["ConstantField", "TableField"]


class TestLimitFamily:
    """Test limit operator enumeration."""

    def test_periodic_is_its_own_limit(self, zigzag):
        """A periodic operator has a single member."""
        family = LimitService.limit_family(GraphService.laplacian(zigzag))
        assert len(family) == 1
        assert family.members[0].provenance == ("periodic",)

    def test_compact_perturbation_vanishes(self, zigzag):
        """Finitely supported potentials disappear in every direction."""
        table = TableField({(0,): np.diag([5.0, -4.0])}, np.zeros((2, 2)))
        family = LimitService.limit_family(OperatorService.schrodinger(zigzag, table))
        assert len(family) == 1
        assert family.members[0].provenance == ("ray [1]", "ray [-1]")
        laplacian = GraphService.laplacian(zigzag)
        for delta in laplacian.shifts:
            assert np.array_equal(family.operators[0].matrix(delta), laplacian.matrix(delta))

    def test_two_limits(self, two_limit_zigzag):
        """The ray limits v = 3 and v = 1 give two members."""
        family = LimitService.limit_family(two_limit_zigzag)
        assert len(family) == 2
        right, left = family.operators
        assert right.matrix((0,))[0, 0].real == pytest.approx(3.0, abs=1e-9)
        assert left.matrix((0,))[0, 0].real == pytest.approx(1.0, abs=1e-9)

    def test_not_slowly_oscillating(self, cayley1):
        """(-1)^α has increments of size 2."""
        potential = OperatorService.parse_potential({"rule": {"name": "alternating", "d": 1}}, cayley1)
        with pytest.raises(NotSOClassError):
            LimitService.limit_family(OperatorService.schrodinger(cayley1, potential))

    def test_no_ray_limit(self, cayley1):
        """sin(sqrt|α|) is slowly oscillating but never settles along a ray."""
        potential = OperatorService.parse_potential({"rule": {"name": "sqrt_oscillation", "c": 0, "d": 1}}, cayley1)
        with pytest.raises(NoConvergenceDetectedError):
            LimitService.limit_family(OperatorService.schrodinger(cayley1, potential))

    def test_declared_limits(self, cayley1):
        """Declared partial limits replace sampling."""
        data = {
            "rule": {"name": "sqrt_oscillation", "c": 0, "d": 1},
            "limits": [{"direction": [1], "values": [0.5]}, {"direction": [-1], "values": [-0.5]}],
        }
        operator = OperatorService.schrodinger(cayley1, OperatorService.parse_potential(data, cayley1))
        family = LimitService.limit_family(operator)
        assert len(family) == 2
        spectrum = LimitService.essential_spectrum(operator)
        assert spectrum.lower == pytest.approx(-1.5, abs=1e-5)
        assert spectrum.upper == pytest.approx(1.5, abs=1e-5)


class TestEssentialSpectrum:
    """Test essential spectra as unions over the limit family."""

    def test_two_limit_union(self, two_limit_zigzag):
        """[0, 2] ∪ [2, 4] = [0, 4]."""
        spectrum = LimitService.essential_spectrum(two_limit_zigzag)
        assert len(spectrum) == 1
        assert spectrum.lower == pytest.approx(0.0, abs=1e-5)
        assert spectrum.upper == pytest.approx(4.0, abs=1e-5)

    def test_compact_perturbation_invariance(self, zigzag):
        """Adding a finitely supported potential changes nothing."""
        table = TableField({(0,): np.diag([5.0, -4.0]), (3,): np.diag([0.0, 2.0])}, np.zeros((2, 2)))
        base = OperatorService.schrodinger(zigzag, ConstantField(np.diag([1.0, 3.0])))
        perturbed = OperatorService.add(base, OperatorService.multiplication(zigzag, table))
        assert LimitService.essential_spectrum(perturbed) == LimitService.essential_spectrum(base)

    def test_report_gaps(self, zigzag):
        """v = (1, 3) has the gap (1, 3) inside [0, 4]."""
        operator = OperatorService.schrodinger(zigzag, ConstantField(np.diag([1.0, 3.0])))
        report = LimitService.report(operator, window=(0.0, 4.0))
        assert len(report.gaps) == 1
        assert report.gaps[0][0] == pytest.approx(1.0, abs=1e-6)
        assert report.gaps[0][1] == pytest.approx(3.0, abs=1e-6)

    def test_non_self_adjoint_member_gives_curves(self, cayley1):
        """Non-Hermitian members are reported as curves."""
        shift = OperatorService.multiplication(cayley1, ConstantField(np.array([[1j]])))
        spectrum = LimitService.essential_spectrum(OperatorService.add(GraphService.laplacian(cayley1), shift))
        assert isinstance(spectrum, tuple)
        assert np.allclose(spectrum[0].values.imag, 1.0)

    def test_perturbed_spectrum(self, cayley1):
        """Δ_Z - 0.75 δ_0 has the single eigenvalue -1.25 below the band."""
        potential = MultiparticleService.parse_radial("delta:-0.75", Vertex(1, (0,)))
        spectrum = LimitService.perturbed_spectrum(cayley1, potential, schedule=(20, 40))
        assert len(spectrum) == 2
        assert spectrum.intervals[0][0] == pytest.approx(-1.25, abs=1e-6)
        assert spectrum.upper == pytest.approx(1.0, abs=1e-6)


class TestFredholm:
    """Test Fredholm queries."""

    def test_decaying_outside_band(self, decaying_cayley):
        """λ = 2 is outside [-1, 1]."""
        result = LimitService.fredholm_check(decaying_cayley, 2)
        assert result.fredholm
        assert result.failing_member is None

    def test_decaying_inside_band(self, decaying_cayley):
        """λ = 0 fails with a witness where cos φ = 0."""
        result = LimitService.fredholm_check(decaying_cayley, 0)
        assert not result.fredholm
        assert math.cos(result.witness[0]) == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.parametrize("spectral_parameter", [5, -1])
    def test_two_limit_outside(self, two_limit_zigzag, spectral_parameter):
        """λ outside [0, 4] is Fredholm."""
        assert LimitService.fredholm_check(two_limit_zigzag, spectral_parameter).fredholm

    def test_two_limit_inside(self, two_limit_zigzag):
        """λ = 1 lies in the left member's spectrum."""
        result = LimitService.fredholm_check(two_limit_zigzag, 1)
        assert not result.fredholm
        assert result.failing_member == 1

    def test_complex_parameter(self, zigzag):
        """Non-real λ is never in a self-adjoint spectrum."""
        assert LimitService.fredholm_check(GraphService.laplacian(zigzag), 0.5j).fredholm
