"""Tests for app/services/operator_service.py"""

import json

import numpy as np
import pytest

from app.exceptions import (
    BandRadiusViolatedError,
    GraphMismatchError,
    NotDiagonalError,
    PotentialFormatError,
    UnboundedCoefficientError,
)
from app.models import ConstantField, PeriodicBandOperator, RuleField, TableField, Vertex
from app.services.graph_service import GraphService
from app.services.operator_service import OperatorService, window_cells
from app.services.symbol_service import SymbolService


@pytest.fixture
def zigzag():
    return GraphService.builtin_graph("zigzag")


@pytest.fixture
def cayley1():
    return GraphService.builtin_graph("cayley", 1)


@pytest.fixture
def table_potential():
    """Finitely supported potential on the zigzag graph."""
    default = np.zeros((2, 2))
    entries = {(0,): np.diag([1.0, 0.0]), (2,): np.diag([0.0, -2.0])}
    return TableField(entries, default)


def random_periodic(graph, rng):
    terms = {}
    for delta in [(-1,), (0,), (1,)]:
        terms[delta] = ConstantField(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return PeriodicBandOperator(graph, terms)


class TestKernel:
    """Test kernel read-off and application."""

    def test_zigzag_kernel(self, zigzag):
        """k((x1, 0), (x2, -1)) is the weight of the edge (1, 2, -1)."""
        laplacian = GraphService.laplacian(zigzag)
        assert OperatorService.kernel(laplacian, Vertex(1, (0,)), Vertex(2, (-1,))) == pytest.approx(0.5)
        assert OperatorService.kernel(laplacian, Vertex(1, (0,)), Vertex(1, (1,))) == 0

    def test_apply_delta(self, cayley1):
        """Δ_Z applied to δ_0 spreads half to each neighbour."""
        laplacian = GraphService.laplacian(cayley1)
        result = OperatorService.apply(laplacian, {Vertex(1, (0,)): 1.0})
        assert result == {Vertex(1, (-1,)): 0.5, Vertex(1, (1,)): 0.5}

    def test_identity(self, zigzag):
        """I u = u."""
        u = {Vertex(1, (0,)): 2.0, Vertex(2, (3,)): -1.0}
        assert OperatorService.apply(OperatorService.identity(zigzag), u) == u


class TestQuotientTransform:
    """Test kernel to shift-term conversion."""

    def test_periodic_round_trip(self, zigzag):
        """Periodic kernels come back as the original constant terms."""
        laplacian = GraphService.laplacian(zigzag)
        rebuilt = OperatorService.quotient_transform(
            zigzag, lambda x, y: OperatorService.kernel(laplacian, x, y), radius=1, periodic=True
        )
        assert rebuilt.is_periodic
        assert rebuilt.shifts == laplacian.shifts
        for delta in laplacian.shifts:
            assert np.array_equal(rebuilt.coefficient(delta, (0,)), laplacian.coefficient(delta, (0,)))

    def test_round_trip_on_window(self, zigzag, table_potential):
        """Kernel values agree exactly on a radius-4 window."""
        operator = OperatorService.schrodinger(zigzag, table_potential)
        rebuilt = OperatorService.quotient_transform(
            zigzag, lambda x, y: OperatorService.kernel(operator, x, y), radius=1, sample_radius=4
        )
        vertices = [Vertex(j, cell) for j in (1, 2) for cell in window_cells(1, 4)]
        for x in vertices:
            for y in vertices:
                assert OperatorService.kernel(rebuilt, x, y) == OperatorService.kernel(operator, x, y)

    def test_band_radius_violated(self, cayley1):
        """A kernel reaching distance 2 is not of radius 1."""

        def kernel(x, y):
            return 1.0 if abs(x.cell[0] - y.cell[0]) == 2 else 0.0

        with pytest.raises(BandRadiusViolatedError):
            OperatorService.quotient_transform(cayley1, kernel, radius=1)


class TestAlgebra:
    """Test sums, products, adjoints and shifts."""

    def test_symbol_is_multiplicative(self, zigzag):
        """σ_{AB} = σ_A σ_B on random periodic pairs."""
        rng = np.random.default_rng(7)
        angles = np.linspace(0.0, 2.0 * np.pi, 9)[:, None]
        for _ in range(100):
            a, b = random_periodic(zigzag, rng), random_periodic(zigzag, rng)
            product = SymbolService.eval_symbol(SymbolService.build_symbol(OperatorService.compose(a, b)), angles)
            left = SymbolService.eval_symbol(SymbolService.build_symbol(a), angles)
            right = SymbolService.eval_symbol(SymbolService.build_symbol(b), angles)
            assert np.abs(product - left @ right).max() < 1e-10

    def test_adjoint_symbol(self, zigzag):
        """σ_{A*} = σ_A^H."""
        a = random_periodic(zigzag, np.random.default_rng(3))
        angles = np.array([[0.3], [1.7], [4.0]])
        adjoint = SymbolService.eval_symbol(SymbolService.build_symbol(OperatorService.adjoint(a)), angles)
        direct = SymbolService.eval_symbol(SymbolService.build_symbol(a), angles)
        assert np.abs(adjoint - direct.conj().swapaxes(-1, -2)).max() < 1e-12

    def test_adjoint_of_variable_operator(self, zigzag, table_potential):
        """(A*)* = A for operators with non-constant coefficients."""
        operator = OperatorService.compose(
            OperatorService.schrodinger(zigzag, table_potential), GraphService.laplacian(zigzag)
        )
        twice = OperatorService.adjoint(OperatorService.adjoint(operator))
        for delta in operator.shifts:
            for cell in window_cells(1, 3):
                assert np.allclose(twice.coefficient(delta, cell), operator.coefficient(delta, cell))

    def test_add_and_scale(self, cayley1):
        """Δ + Δ = 2Δ."""
        laplacian = GraphService.laplacian(cayley1)
        doubled = OperatorService.add(laplacian, laplacian)
        scaled = OperatorService.scale(laplacian, 2.0)
        for delta in laplacian.shifts:
            assert np.array_equal(doubled.coefficient(delta, (0,)), scaled.coefficient(delta, (0,)))

    def test_graph_mismatch(self, cayley1, zigzag):
        """Operators on different graphs do not add."""
        with pytest.raises(GraphMismatchError):
            OperatorService.add(GraphService.laplacian(cayley1), GraphService.laplacian(zigzag))

    def test_shift_conjugate(self, zigzag, table_potential):
        """T_α^{-1} A T_α moves the table entry at α to the origin."""
        operator = OperatorService.schrodinger(zigzag, table_potential)
        shifted = OperatorService.shift_conjugate(operator, (2,))
        assert shifted.coefficient((0,), (0,))[1, 1] == pytest.approx(-2.0)
        assert shifted.coefficient((0,), (-2,))[0, 0] == pytest.approx(1.0)

    def test_periodic_shift_conjugate_is_identity(self, zigzag):
        """Periodic operators commute with shifts."""
        laplacian = GraphService.laplacian(zigzag)
        shifted = OperatorService.shift_conjugate(laplacian, (5,))
        for delta in laplacian.shifts:
            assert np.array_equal(shifted.coefficient(delta, (0,)), laplacian.coefficient(delta, (0,)))

    def test_compose_is_associative(self, zigzag, table_potential):
        """(AB)C = A(BC) on random periodic triples and with a variable factor."""
        rng = np.random.default_rng(19)
        variable = OperatorService.schrodinger(zigzag, table_potential)
        triples = [tuple(random_periodic(zigzag, rng) for _ in range(3)) for _ in range(20)]
        triples.append((random_periodic(zigzag, rng), variable, random_periodic(zigzag, rng)))
        for a, b, c in triples:
            left = OperatorService.compose(OperatorService.compose(a, b), c)
            right = OperatorService.compose(a, OperatorService.compose(b, c))
            for delta in set(left.shifts) | set(right.shifts):
                for cell in window_cells(1, 4):
                    assert np.abs(left.coefficient(delta, cell) - right.coefficient(delta, cell)).max() < 1e-10

    def test_shift_conjugate_moves_variable_operators(self, zigzag, table_potential):
        """A non-periodic operator is changed by some shift, a periodic one by none."""
        operator = OperatorService.schrodinger(zigzag, table_potential)
        shifted = OperatorService.shift_conjugate(operator, (1,))
        assert any(
            not np.array_equal(shifted.coefficient((0,), cell), operator.coefficient((0,), cell))
            for cell in window_cells(1, 3)
        )
        periodic = random_periodic(zigzag, np.random.default_rng(23))
        for alpha in [(-3,), (1,), (4,)]:
            moved = OperatorService.shift_conjugate(periodic, alpha)
            for delta in periodic.shifts:
                for cell in window_cells(1, 2):
                    assert np.array_equal(moved.coefficient(delta, cell), periodic.coefficient(delta, cell))

    def test_so_combination(self, cayley1):
        """b Δ c with constant multipliers is a scaled Laplacian."""
        two = ConstantField(np.array([[2.0]]))
        one = ConstantField(np.array([[1.0]]))
        laplacian = GraphService.laplacian(cayley1)
        combined = OperatorService.so_combination(cayley1, [(two, laplacian, one)])
        assert combined.is_periodic
        assert combined.coefficient((1,), (0,))[0, 0] == pytest.approx(1.0)


class TestNormsAndPredicates:
    """Test the Wiener norm and operator predicates."""

    def test_wiener_norm_cayley(self, cayley1):
        """‖Δ_Z‖_W = 1/2 + 1/2."""
        assert OperatorService.wiener_norm(GraphService.laplacian(cayley1)) == pytest.approx(1.0)

    def test_wiener_norm_zigzag(self, zigzag):
        """Three shift terms, each with column sum 1/2."""
        assert OperatorService.wiener_norm(GraphService.laplacian(zigzag)) == pytest.approx(1.5)

    def test_unbounded_coefficient(self, cayley1):
        """A coefficient exceeding its declared bound is rejected."""
        field = RuleField(rule=lambda cell: np.array([[2.0 + abs(cell[0])]]), size=1, bound=1.0)
        operator = OperatorService.multiplication(cayley1, field)
        with pytest.raises(UnboundedCoefficientError):
            OperatorService.wiener_norm(operator)

    def test_self_adjoint(self, zigzag, table_potential):
        """Schrödinger operators with real potentials are self-adjoint."""
        assert OperatorService.is_self_adjoint(OperatorService.schrodinger(zigzag, table_potential))

    def test_shift_is_not_self_adjoint(self, cayley1):
        """V_1 alone is not self-adjoint."""
        shift = PeriodicBandOperator(cayley1, {(1,): ConstantField(np.array([[1.0]]))})
        assert not OperatorService.is_self_adjoint(shift)

    def test_is_periodic(self, zigzag, table_potential):
        """Finitely supported perturbations break periodicity."""
        assert GraphService.laplacian(zigzag).is_periodic
        assert not OperatorService.schrodinger(zigzag, table_potential).is_periodic

    def test_non_diagonal_potential(self, zigzag):
        """Potentials must be diagonal."""
        with pytest.raises(NotDiagonalError):
            OperatorService.schrodinger(zigzag, ConstantField(np.array([[0.0, 1.0], [1.0, 0.0]])))


class TestPotentialFiles:
    """Test JSON potential descriptions."""

    def test_periodic_potential(self, zigzag):
        """'periodic' gives a constant diagonal field."""
        field = OperatorService.parse_potential({"periodic": [1, 3]}, zigzag)
        assert field.is_constant
        assert np.array_equal(field.at((0,)), np.diag([1.0, 3.0]))

    def test_parts_are_summed(self, zigzag):
        """'periodic' and 'table' add up."""
        data = {"periodic": [1, 1], "table": {"entries": [[2, [4], 5.0]]}}
        field = OperatorService.parse_potential(data, zigzag)
        assert field.at((4,))[1, 1] == pytest.approx(6.0)
        assert field.at((3,))[1, 1] == pytest.approx(1.0)

    def test_rule_with_limits(self, zigzag):
        """Declared limits are attached to the rule."""
        data = {
            "rule": {"name": "ray_limit", "c": [2, 2], "d": [1, 1]},
            "limits": [{"direction": [1], "values": [3, 3]}],
        }
        field = OperatorService.parse_potential(data, zigzag)
        assert field.limit_for((1,)).values == (3.0, 3.0)
        assert field.at((0,))[0, 0] == pytest.approx(2.0)

    @pytest.mark.parametrize(
        "data",
        [
            {"periodic": [1]},
            {"colour": "red"},
            {"rule": {"name": "mystery"}},
            {"limits": [{"direction": [1], "values": [1, 1]}]},
            {"table": {"entries": [[3, [0], 1.0]]}},
        ],
    )
    def test_format_errors(self, zigzag, data):
        """Malformed descriptions raise PotentialFormatError."""
        with pytest.raises(PotentialFormatError):
            OperatorService.parse_potential(data, zigzag)

    def test_load_potential(self, tmp_path, zigzag):
        """Potential files are read as JSON."""
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"periodic": [1, 3]}))
        field = OperatorService.load_potential(path, zigzag)
        assert np.array_equal(field.at((0,)), np.diag([1.0, 3.0]))
