"""Tests for app/utils/linalg.py"""

import numpy as np
import pytest

from app.utils.linalg import characteristic_polynomial, jacobi_eigh, monic_roots


@pytest.fixture
def hermitian_stack():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(20, 4, 4)) + 1j * rng.normal(size=(20, 4, 4))
    return a + a.conj().swapaxes(-1, -2)


class TestJacobi:
    """Test the batched Jacobi eigensolver."""

    def test_matches_lapack(self, hermitian_stack):
        """Eigenvalues agree with numpy.linalg.eigvalsh."""
        values, _ = jacobi_eigh(hermitian_stack)
        assert np.allclose(values, np.linalg.eigvalsh(hermitian_stack), atol=1e-10)

    def test_eigenvectors(self, hermitian_stack):
        """A V = V diag(w)."""
        values, vectors = jacobi_eigh(hermitian_stack, vectors=True)
        lhs = hermitian_stack @ vectors
        rhs = vectors * values[:, None, :]
        assert np.abs(lhs - rhs).max() < 1e-9

    def test_diagonal_input(self):
        """Already diagonal matrices are returned sorted."""
        values, _ = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
        assert values.tolist() == [-1.0, 2.0, 3.0]

    def test_diagonal_four_by_four(self):
        """A complex diagonal 4x4 input converges without a single rotation."""
        values, _ = jacobi_eigh(np.diag([7.905, -4.922, 2.644, -2.578]) + 0j)
        assert values.tolist() == [-4.922, -2.578, 2.644, 7.905]

    @pytest.mark.parametrize("n", [3, 4, 6])
    def test_random_hermitian_sizes(self, n):
        """Stacks of n x n Hermitian matrices match numpy.linalg.eigvalsh."""
        rng = np.random.default_rng(n)
        a = rng.normal(size=(8, n, n)) + 1j * rng.normal(size=(8, n, n))
        a = a + a.conj().swapaxes(-1, -2)
        values, vectors = jacobi_eigh(a, vectors=True)
        assert np.allclose(values, np.linalg.eigvalsh(a), atol=1e-10)
        assert np.abs(a @ vectors - vectors * values[:, None, :]).max() < 1e-9

    def test_zero_matrix(self):
        values, _ = jacobi_eigh(np.zeros((3, 3)))
        assert values.tolist() == [0.0, 0.0, 0.0]

    def test_batch_shape(self):
        """Leading axes are preserved."""
        values, _ = jacobi_eigh(np.broadcast_to(np.eye(2), (3, 5, 2, 2)))
        assert values.shape == (3, 5, 2)


class TestPolynomials:
    """Test characteristic polynomials and their roots."""

    def test_characteristic_polynomial(self):
        """det(λI - A) for a 2x2 matrix is λ² - tr A λ + det A."""
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        coeffs = characteristic_polynomial(a)
        assert np.allclose(coeffs, [-2.0, -5.0, 1.0])

    def test_roots_are_eigenvalues(self):
        """Roots of the characteristic polynomial are the eigenvalues."""
        rng = np.random.default_rng(5)
        a = rng.normal(size=(10, 3, 3)) + 1j * rng.normal(size=(10, 3, 3))
        roots = monic_roots(characteristic_polynomial(a))
        for matrix, found in zip(a, roots):
            expected = np.linalg.eigvals(matrix)
            for z in expected:
                assert np.abs(found - z).min() < 1e-8

    def test_roots_sorted(self):
        """(λ - 2)(λ + 1)(λ - i) has roots sorted by real then imaginary part."""
        coeffs = np.poly([2.0, -1.0, 1j])[::-1]
        roots = monic_roots(coeffs)
        assert np.allclose(roots, [-1.0, 1j, 2.0], atol=1e-10)

    def test_linear(self):
        assert np.allclose(monic_roots(np.array([-3.0, 1.0])), [3.0])
