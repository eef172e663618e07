"""Small dense eigensolvers operating on stacks of matrices."""

from typing import Optional, Tuple

import numpy as np
import structlog

from app.constants import JACOBI_MAX_SWEEPS, JACOBI_OFFDIAG_TOL, ROOT_MAX_ITERATIONS, ROOT_RESIDUAL_TOL
from app.exceptions import NoConvergenceError

logger = structlog.get_logger()

_TINY = np.finfo(float).tiny


def _offdiag_norm(a: np.ndarray) -> np.ndarray:
    mask = ~np.eye(a.shape[-1], dtype=bool)
    return np.linalg.norm(np.where(mask, a, 0.0), axis=(-2, -1))


def _rotate(a: np.ndarray, v: Optional[np.ndarray], p: int, q: int) -> None:
    """Annihilate a[:, p, q] in every matrix of the stack with one complex Jacobi rotation."""
    apq = a[:, p, q]
    mag = np.abs(apq)
    active = mag > _TINY
    safe_mag = np.where(active, mag, 1.0)
    phase = np.where(active, apq / safe_mag, 1.0)

    # Real symmetric 2x2 problem [[app, |apq|], [|apq|, aqq]] after removing the phase
    theta = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe_mag)
    with np.errstate(over="ignore"):
        t = np.where(theta == 0.0, 1.0, np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    ph = np.conj(phase)

    # A <- A G with G = [[c, s], [-s ph, c ph]] on (p, q)
    col_p = a[:, :, p].copy()
    col_q = a[:, :, q].copy()
    a[:, :, p] = c[:, None] * col_p - (s * ph)[:, None] * col_q
    a[:, :, q] = s[:, None] * col_p + (c * ph)[:, None] * col_q

    # A <- G^H A
    row_p = a[:, p, :].copy()
    row_q = a[:, q, :].copy()
    a[:, p, :] = c[:, None] * row_p - (s * phase)[:, None] * row_q
    a[:, q, :] = s[:, None] * row_p + (c * phase)[:, None] * row_q

    a[:, p, q] = np.where(active, 0.0, a[:, p, q])
    a[:, q, p] = np.where(active, 0.0, a[:, q, p])

    if v is not None:
        vp = v[:, :, p].copy()
        vq = v[:, :, q].copy()
        v[:, :, p] = c[:, None] * vp - (s * ph)[:, None] * vq
        v[:, :, q] = s[:, None] * vp + (c * ph)[:, None] * vq


def jacobi_eigh(
    matrices: np.ndarray, vectors: bool = False, max_sweeps: int = JACOBI_MAX_SWEEPS
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Cyclic Jacobi eigensolver for a stack of Hermitian matrices.

    Args:
        matrices: (..., N, N) array; only its Hermitian part is used
        vectors: also return eigenvectors (columns)
        max_sweeps: sweep budget before NoConvergenceError

    Returns:
        (eigenvalues ascending with shape (..., N), eigenvectors (..., N, N) or None)
    """
    arr = np.asarray(matrices, dtype=np.complex128)
    batch_shape, n = arr.shape[:-2], arr.shape[-1]
    a = arr.reshape(-1, n, n)
    a = 0.5 * (a + a.conj().swapaxes(-1, -2))
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy() if vectors else None

    # Entries below _TINY are never rotated, so the floor scales with n
    threshold = np.maximum(JACOBI_OFFDIAG_TOL * np.linalg.norm(a, axis=(-2, -1)), n * _TINY)
    for sweep in range(max_sweeps + 1):
        if np.all(_offdiag_norm(a) <= threshold):
            break
        if sweep == max_sweeps:
            logger.warning("Jacobi sweep budget exhausted", sweeps=max_sweeps, size=n)
            raise NoConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, v, p, q)

    w = np.einsum("...ii->...i", a).real
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    if v is not None:
        v = np.take_along_axis(v, order[:, None, :], axis=-1)
        v = v.reshape(*batch_shape, n, n)
    return w.reshape(*batch_shape, n), v


def characteristic_polynomial(matrices: np.ndarray) -> np.ndarray:
    """
    Coefficients of det(λI - A) by the Faddeev-LeVerrier recursion.

    Returns:
        (..., N + 1) complex array, ascending powers, leading coefficient 1
    """
    arr = np.asarray(matrices, dtype=np.complex128)
    n = arr.shape[-1]
    eye = np.eye(n, dtype=np.complex128)
    coeffs = np.zeros(arr.shape[:-2] + (n + 1,), dtype=np.complex128)
    coeffs[..., n] = 1.0
    m = np.zeros_like(arr)
    for k in range(1, n + 1):
        m = arr @ m + coeffs[..., n - k + 1][..., None, None] * eye
        coeffs[..., n - k] = -np.trace(arr @ m, axis1=-2, axis2=-1) / k
    return coeffs


def polynomial_value(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Horner evaluation; ``coeffs`` (B, D + 1) ascending, ``z`` (B, K)."""
    result = np.zeros_like(z, dtype=np.complex128)
    for k in range(coeffs.shape[-1] - 1, -1, -1):
        result = result * z + coeffs[:, k][:, None]
    return result


def polynomial_scale(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Σ_k |c_k| |z|^k, the size against which residuals are measured."""
    absz = np.abs(z)
    result = np.zeros_like(absz)
    for k in range(coeffs.shape[-1] - 1, -1, -1):
        result = result * absz + np.abs(coeffs[:, k])[:, None]
    return result


def monic_roots(coeffs: np.ndarray, max_iterations: int = ROOT_MAX_ITERATIONS) -> np.ndarray:
    """
    Roots of monic polynomials by Weierstrass (Durand-Kerner) simultaneous iteration.

    Args:
        coeffs: (..., D + 1) ascending coefficients with leading coefficient 1

    Returns:
        (..., D) complex roots sorted by (real, imag)
    """
    arr = np.asarray(coeffs, dtype=np.complex128)
    batch_shape, degree = arr.shape[:-1], arr.shape[-1] - 1
    c = arr.reshape(-1, degree + 1)
    if degree == 0:
        return np.zeros(batch_shape + (0,), dtype=np.complex128)
    if degree == 1:
        return (-c[:, 0]).reshape(*batch_shape, 1)

    radius = 1.0 + np.max(np.abs(c[:, :-1]), axis=-1)
    z = radius[:, None] * (0.4 + 0.9j) ** np.arange(degree)[None, :]
    done = np.zeros(c.shape[0], dtype=bool)
    off_diag = ~np.eye(degree, dtype=bool)

    for _ in range(max_iterations):
        residual = np.abs(polynomial_value(c, z))
        done |= np.all(residual <= ROOT_RESIDUAL_TOL * polynomial_scale(c, z), axis=-1)
        if np.all(done):
            break
        live = ~done
        zl = z[live]
        diff = zl[:, :, None] - zl[:, None, :]
        diff = np.where(off_diag, diff, 1.0)
        diff = np.where(np.abs(diff) > _TINY, diff, _TINY)
        z[live] = zl - polynomial_value(c[live], zl) / np.prod(diff, axis=-1)
    else:
        logger.warning("Root iteration budget exhausted", iterations=max_iterations, degree=degree)
        raise NoConvergenceError(f"Root iteration did not converge in {max_iterations} steps")

    order = np.lexsort((z.imag, z.real), axis=-1)
    z = np.take_along_axis(z, order, axis=-1)
    return z.reshape(*batch_shape, degree)
