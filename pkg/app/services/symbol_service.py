"""Symbol service - torus symbols, dispersion curves, certified bands, invertibility."""

import itertools
import math
from typing import List, Optional, Tuple

import numpy as np
import structlog
from scipy.optimize import linear_sum_assignment

from app.config import config
from app.constants import (
    CURVE_CHUNK_POINTS,
    HERMITIAN_CHECK_TOL,
    MAX_REFINEMENT_LEVELS,
    SEED_POINTS_LIMIT,
    ZERO_DET_TOL,
)
from app.exceptions import InconclusiveError, NotHermitianError, NotPeriodicError
from app.models import (
    BandOperator,
    DispersionCurves,
    InvertibilityResult,
    LipschitzConstants,
    Symbol,
    neg_cell,
)
from app.utils.formatters import format_cell, format_matrix
from app.utils.intervals import IntervalUnion
from app.utils.linalg import characteristic_polynomial, jacobi_eigh, monic_roots

logger = structlog.get_logger()


def torus_grid(grid_size: int, n: int) -> np.ndarray:
    """Angles 2πk/M for k in {0..M-1}^n, lexicographic with the last axis fastest; shape (M^n, n)."""
    axis = 2.0 * np.pi * np.arange(grid_size) / grid_size
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)


def _box_offsets(n: int, half_width: float) -> np.ndarray:
    """Centers of the 2^n children of a box, relative to the parent center."""
    return np.array(list(itertools.product((-0.5 * half_width, 0.5 * half_width), repeat=n)))


class SymbolService:
    """Service for matrix symbols of periodic band operators."""

    # -------------------------------------------------------------------------
    # Construction and evaluation
    # -------------------------------------------------------------------------

    @staticmethod
    def build_symbol(operator: BandOperator) -> Symbol:
        """
        σ_A(t) = Σ_β r_A(β) t^β.

        Raises:
            NotPeriodicError: some coefficient depends on the cell
        """
        if not operator.is_periodic:
            raise NotPeriodicError("Symbol requires a periodic operator (all shift coefficients constant)")
        origin = operator.graph.origin
        terms = {}
        for delta, field in operator.terms.items():
            matrix = field.at(origin)
            if np.any(matrix != 0):
                # (Au)(α) picks u(α + δ), which carries the Fourier factor t^{-δ}
                terms[neg_cell(delta)] = matrix
        return Symbol(size=operator.size, n=operator.graph.n, terms=terms)

    @staticmethod
    def eval_symbol(symbol: Symbol, angles) -> np.ndarray:
        """
        Evaluate σ at t_k = exp(iφ_k).

        Args:
            symbol: the symbol
            angles: (n,) for a single point or (..., n) for a batch

        Returns:
            (N, N) or (..., N, N) complex array
        """
        phis = np.asarray(angles, dtype=float)
        if phis.ndim == 0:
            phis = phis.reshape(1)
        single = phis.ndim == 1
        points = phis.reshape(-1, symbol.n)
        phase = np.exp(1j * (points @ symbol.exponents.T.astype(float)))
        values = np.einsum("pt,tij->pij", phase, symbol.stack)
        if single:
            return values[0]
        return values.reshape(phis.shape[:-1] + (symbol.size, symbol.size))

    @staticmethod
    def derivative_stack(symbol: Symbol, points: np.ndarray) -> np.ndarray:
        """∂σ/∂φ_i at the points; shape (P, n, N, N)."""
        phase = np.exp(1j * (points @ symbol.exponents.T.astype(float)))
        weights = 1j * symbol.exponents.astype(float)  # (T, n)
        return np.einsum("pt,ti,tjk->pijk", phase, weights, symbol.stack)

    @staticmethod
    def is_hermitian(symbol: Symbol, tol: float = HERMITIAN_CHECK_TOL) -> bool:
        """r(-β) = r(β)^H for every β, i.e. σ(t) Hermitian on the whole torus."""
        for beta, matrix in symbol.terms.items():
            partner = symbol.terms.get(neg_cell(beta))
            if partner is None:
                partner = np.zeros_like(matrix)
            if np.abs(partner - matrix.conj().T).max(initial=0.0) > tol:
                return False
        return True

    @staticmethod
    def eigenvalues(matrices: np.ndarray, hermitian_hint: bool) -> np.ndarray:
        """
        Eigenvalues of one matrix or a stack.

        Hermitian path: cyclic Jacobi, real values ascending.
        General path: characteristic polynomial roots, complex values sorted by (Re, Im).

        Raises:
            NoConvergenceError: iteration budget exhausted
        """
        if hermitian_hint:
            values, _ = jacobi_eigh(matrices)
            return values
        return monic_roots(characteristic_polynomial(matrices))

    # -------------------------------------------------------------------------
    # Dispersion curves
    # -------------------------------------------------------------------------

    @staticmethod
    def dispersion_curves(
        symbol: Symbol, grid_size: Optional[int] = None, hermitian_hint: Optional[bool] = None
    ) -> DispersionCurves:
        """
        Eigenvalues of σ at all M^n grid angles.

        Hermitian symbols give ascending branches. Otherwise branches are matched
        to the preceding grid neighbour by minimal total displacement.
        """
        grid_size = config.grid if grid_size is None else grid_size
        if grid_size < 2:
            raise ValueError(f"Grid size must be at least 2, got {grid_size}")
        hermitian = SymbolService.is_hermitian(symbol) if hermitian_hint is None else hermitian_hint

        angles = torus_grid(grid_size, symbol.n)
        chunks = []
        for start in range(0, len(angles), CURVE_CHUNK_POINTS):
            batch = SymbolService.eval_symbol(symbol, angles[start : start + CURVE_CHUNK_POINTS])
            chunks.append(np.asarray(SymbolService.eigenvalues(batch, hermitian), dtype=np.complex128))
        values = np.concatenate(chunks, axis=0)

        matching = "ascending"
        if not hermitian:
            values = SymbolService._match_branches(values, grid_size, symbol.n)
            matching = "nearest"
        logger.debug("Dispersion curves computed", points=len(angles), branches=symbol.size, matching=matching)
        return DispersionCurves(grid_size, angles, values, hermitian, matching)

    @staticmethod
    def _match_branches(values: np.ndarray, grid_size: int, n: int) -> np.ndarray:
        """Reorder each point's eigenvalues to follow its predecessor along the last nonzero grid axis."""
        matched = values.copy()
        strides = [grid_size ** (n - 1 - i) for i in range(n)]
        for p in range(1, len(values)):
            predecessor = p
            for axis in range(n - 1, -1, -1):
                if (p // strides[axis]) % grid_size != 0:
                    predecessor = p - strides[axis]
                    break
            cost = np.abs(matched[predecessor][:, None] - values[p][None, :])
            _, columns = linear_sum_assignment(cost)
            matched[p] = values[p][columns]
        return matched

    # -------------------------------------------------------------------------
    # Certified bands
    # -------------------------------------------------------------------------

    @staticmethod
    def lipschitz_constants(symbol: Symbol) -> LipschitzConstants:
        """L_i = Σ‖r(β)‖|β_i|, H = Σ‖r(β)‖|β|_1^2, S = Σ‖r(β)‖ with spectral norms."""
        if not symbol.terms:
            return LipschitzConstants(np.zeros(symbol.n), 0.0, 0.0)
        norms = np.linalg.norm(symbol.stack, ord=2, axis=(-2, -1))
        exponents = np.abs(symbol.exponents.astype(float))
        per_axis = norms @ exponents
        second_order = float(norms @ (exponents.sum(axis=1) ** 2))
        return LipschitzConstants(per_axis, second_order, float(norms.sum()))

    @staticmethod
    def _seed(symbol: Symbol, grid_size: int) -> Tuple[np.ndarray, float]:
        seed = max(2, min(grid_size, int(math.floor(SEED_POINTS_LIMIT ** (1.0 / symbol.n) + 1e-9))))
        return torus_grid(seed, symbol.n), math.pi / seed

    @staticmethod
    def _eigen_bounds(
        symbol: Symbol, centers: np.ndarray, half_width: float, constants: LipschitzConstants
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Eigenvalues at box centers and bounds on their variation inside each box.

        Returns:
            (values, bounds), both (B, N)
        """
        matrices = SymbolService.eval_symbol(symbol, centers)
        values, vectors = jacobi_eigh(matrices, vectors=True)
        eps = half_width * float(constants.per_axis.sum())
        bounds = np.full(values.shape, eps)
        if eps == 0.0:
            return values, bounds

        size = symbol.size
        if size > 1:
            distance = np.abs(values[:, :, None] - values[:, None, :])
            distance[:, np.arange(size), np.arange(size)] = np.inf
            gap = distance.min(axis=-1)
        else:
            gap = np.full(values.shape, np.inf)

        derivatives = SymbolService.derivative_stack(symbol, centers)
        gradient = np.einsum("bkj,bikl,blj->bji", vectors.conj(), derivatives, vectors).real  # (B, N, n)
        isolated = gap >= 4.0 * eps
        with np.errstate(divide="ignore"):
            curvature = np.where(isolated, 2.0 * eps * eps / np.where(isolated, gap, 1.0), np.inf)
        second = np.abs(gradient).sum(axis=-1) * half_width + 0.5 * constants.second_order * half_width**2 + curvature
        return values, np.minimum(bounds, second)

    @staticmethod
    def selfadjoint_bands(
        symbol: Symbol, tol: Optional[float] = None, grid_size: Optional[int] = None, max_boxes: Optional[int] = None
    ) -> IntervalUnion:
        """
        Certified union of the bands [min λ_j, max λ_j].

        Each branch extreme is found by branch-and-bound over torus boxes: a box is
        dropped once its center value plus the eigenvalue variation bound cannot
        beat the best achieved value by more than tol. Reported extremes are
        achieved values, so the result is exact to within tol on both sides.
        Bands separated by at most 2·tol are merged.

        Raises:
            NotHermitianError: σ(t) is not Hermitian on the seed grid
        """
        tol = config.tol if tol is None else tol
        grid_size = config.grid if grid_size is None else grid_size
        max_boxes = config.max_boxes if max_boxes is None else max_boxes
        if tol <= 0:
            raise ValueError(f"Tolerance must be positive, got {tol}")

        n, size = symbol.n, symbol.size
        centers, half_width = SymbolService._seed(symbol, grid_size)
        seed_values = SymbolService.eval_symbol(symbol, centers)
        scale = max(1.0, float(np.abs(seed_values).max(initial=0.0)))
        asymmetry = float(np.abs(seed_values - seed_values.conj().swapaxes(-1, -2)).max(initial=0.0))
        if asymmetry > HERMITIAN_CHECK_TOL * scale:
            raise NotHermitianError(f"Symbol is not Hermitian on the torus grid (deviation {asymmetry:.3g})")

        constants = SymbolService.lipschitz_constants(symbol)
        best_min = np.full(size, np.inf)
        best_max = np.full(size, -np.inf)
        need = np.ones((len(centers), size, 2), dtype=bool)
        certified = True
        level = 0
        while True:
            values, bounds = SymbolService._eigen_bounds(symbol, centers, half_width, constants)
            best_min = np.minimum(best_min, values.min(axis=0))
            best_max = np.maximum(best_max, values.max(axis=0))
            need[:, :, 0] &= values - bounds < best_min[None, :] - tol
            need[:, :, 1] &= values + bounds > best_max[None, :] + tol
            alive = need.any(axis=(1, 2))
            if not alive.any():
                break
            if level == MAX_REFINEMENT_LEVELS:
                certified = False
                break

            centers, need = centers[alive], need[alive]
            values, bounds = values[alive], bounds[alive]
            children = 2**n
            if len(centers) * children > max_boxes:
                excess = np.maximum(
                    np.where(need[:, :, 0], best_min[None, :] - (values - bounds), -np.inf).max(axis=1),
                    np.where(need[:, :, 1], values + bounds - best_max[None, :], -np.inf).max(axis=1),
                )
                keep = np.sort(np.argsort(-excess, kind="stable")[: max(1, max_boxes // children)])
                centers, need = centers[keep], need[keep]
                certified = False

            offsets = _box_offsets(n, half_width)
            centers = (centers[:, None, :] + offsets[None, :, :]).reshape(-1, n)
            need = np.repeat(need, children, axis=0)
            half_width *= 0.5
            level += 1

        if not certified:
            logger.warning("Band enclosure not certified", levels=level, max_boxes=max_boxes, tol=tol)
        bands = IntervalUnion.from_intervals(zip(best_min, best_max), merge_tol=2.0 * tol)
        logger.debug("Bands computed", branches=size, levels=level, bands=len(bands), certified=certified)
        return bands

    # -------------------------------------------------------------------------
    # Invertibility
    # -------------------------------------------------------------------------

    @staticmethod
    def is_invertible_symbol(
        symbol: Symbol, tol: Optional[float] = None, grid_size: Optional[int] = None, max_boxes: Optional[int] = None
    ) -> InvertibilityResult:
        """
        Decide whether det σ(t) ≠ 0 on the whole torus.

        Boxes are refined until |det| at the center minus the Lipschitz bound
        N·S^{N-1}·Σ L_i·h is above tol everywhere (invertible), or a center has
        |det| below the zero threshold, or a real determinant changes sign
        (not invertible, witness = smallest |det| seen).

        Raises:
            InconclusiveError: neither outcome reached within the refinement budget
        """
        tol = config.tol if tol is None else tol
        grid_size = config.grid if grid_size is None else grid_size
        max_boxes = config.max_boxes if max_boxes is None else max_boxes
        n, size = symbol.n, symbol.size
        constants = SymbolService.lipschitz_constants(symbol)
        scale = max(constants.total_norm**size, np.finfo(float).tiny)
        det_lipschitz = size * constants.total_norm ** (size - 1) * float(constants.per_axis.sum())

        centers, half_width = SymbolService._seed(symbol, grid_size)
        min_det = np.inf
        witness: Optional[Tuple[float, ...]] = None
        signs_seen = set()
        truncated = False
        for level in range(MAX_REFINEMENT_LEVELS + 1):
            dets = np.linalg.det(SymbolService.eval_symbol(symbol, centers))
            magnitude = np.abs(dets)
            best = int(np.argmin(magnitude))
            if magnitude[best] < min_det:
                min_det = float(magnitude[best])
                witness = tuple(float(a) for a in centers[best])

            if min_det <= ZERO_DET_TOL * scale:
                logger.debug("Symbol singular", witness=witness, min_det=min_det, level=level)
                return InvertibilityResult(False, min_det, witness)
            if np.all(np.abs(dets.imag) <= HERMITIAN_CHECK_TOL * scale):
                signs_seen.update(np.sign(dets.real[magnitude > 0]).tolist())
                if {1.0, -1.0} <= signs_seen:
                    logger.debug("Real determinant changes sign", witness=witness, level=level)
                    return InvertibilityResult(False, min_det, witness)

            lower = magnitude - det_lipschitz * half_width
            alive = lower <= tol
            if not alive.any():
                if truncated:
                    break
                logger.debug("Symbol invertible", min_det=min_det, levels=level)
                return InvertibilityResult(True, min_det, None)
            if level == MAX_REFINEMENT_LEVELS:
                break

            centers, lower = centers[alive], lower[alive]
            children = 2**n
            if len(centers) * children > max_boxes:
                keep = np.sort(np.argsort(lower, kind="stable")[: max(1, max_boxes // children)])
                centers = centers[keep]
                truncated = True
            offsets = _box_offsets(n, half_width)
            centers = (centers[:, None, :] + offsets[None, :, :]).reshape(-1, n)
            half_width *= 0.5

        logger.warning("Invertibility test inconclusive", min_det=min_det, witness=witness, truncated=truncated)
        raise InconclusiveError(
            f"Cannot decide invertibility: min |det| = {min_det:.3g} is within the tolerance band of zero"
        )

    # -------------------------------------------------------------------------
    # Text
    # -------------------------------------------------------------------------

    @staticmethod
    def symbol_terms_text(symbol: Symbol) -> List[str]:
        """One line per exponent: 'beta=[..] r=[..]'."""
        return [f"beta={format_cell(beta)} r={format_matrix(matrix)}" for beta, matrix in symbol.terms.items()]
