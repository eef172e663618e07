"""Finite section service - dense truncations of band operators."""

from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import structlog

from app.config import config
from app.constants import HERMITIAN_CHECK_TOL
from app.exceptions import NoConvergenceError, WindowTooLargeError
from app.models import BandOperator, Vertex, WindowMatrix
from app.services.graph_service import GraphService
from app.services.operator_service import OperatorService, window_cells
from app.utils.export import matrix_dump_text

logger = structlog.get_logger()


class FiniteSectionService:
    """Service for finite-section oracles."""

    @staticmethod
    def _fill(operator: BandOperator, index: Sequence[Vertex], radius: int, kind: str) -> WindowMatrix:
        position = {vertex: row for row, vertex in enumerate(index)}
        matrix = np.zeros((len(index), len(index)), dtype=np.complex128)
        for column, y in enumerate(index):
            for x, value in OperatorService.apply(operator, {y: 1.0}).items():
                row = position.get(x)
                if row is not None:
                    matrix[row, column] = value
        return WindowMatrix(tuple(index), matrix, radius, kind)

    @staticmethod
    def _check_rows(rows: int, max_rows: Optional[int]):
        max_rows = config.max_window_rows if max_rows is None else max_rows
        if rows > max_rows:
            raise WindowTooLargeError(f"Window needs {rows} rows, limit is {max_rows}")

    @staticmethod
    def truncate(operator: BandOperator, radius: int, max_rows: Optional[int] = None) -> WindowMatrix:
        """
        Restrict A to the box window |cell|_∞ <= R.

        Rows are ordered orbit-major, cells lexicographic within each orbit.

        Raises:
            WindowTooLargeError: N·(2R+1)^n exceeds the row cap
        """
        if radius < 0:
            raise ValueError(f"Window radius must be non-negative, got {radius}")
        graph = operator.graph
        FiniteSectionService._check_rows(graph.num_orbits * (2 * radius + 1) ** graph.n, max_rows)
        if radius < operator.band_width:
            logger.warning("Window narrower than band width", radius=radius, band_width=operator.band_width)
        cells = window_cells(graph.n, radius)
        index = [Vertex(orbit, cell) for orbit in range(1, graph.num_orbits + 1) for cell in cells]
        return FiniteSectionService._fill(operator, index, radius, "box")

    @staticmethod
    def truncate_ball(
        operator: BandOperator, center: Vertex, radius: int, max_rows: Optional[int] = None
    ) -> WindowMatrix:
        """Restrict A to the graph-distance ball ρ(center, x) <= R, rows in BFS order."""
        ball = GraphService.ball(operator.graph, center, radius)
        FiniteSectionService._check_rows(len(ball), max_rows)
        return FiniteSectionService._fill(operator, [vertex for vertex, _ in ball], radius, "ball")

    @staticmethod
    def is_hermitian(window: WindowMatrix, tol: float = HERMITIAN_CHECK_TOL) -> bool:
        return bool(np.abs(window.matrix - window.matrix.conj().T).max(initial=0.0) <= tol)

    @staticmethod
    def window_eigenvalues(matrix: np.ndarray, hermitian: bool) -> np.ndarray:
        """
        Dense eigenvalues; ascending reals on the Hermitian path, (Re, Im)-sorted otherwise.

        Raises:
            NoConvergenceError: LAPACK failed to converge
        """
        try:
            if hermitian:
                return np.linalg.eigvalsh(matrix)
            values = np.linalg.eigvals(matrix)
        except np.linalg.LinAlgError as e:
            raise NoConvergenceError(f"Dense eigensolver failed: {e}") from e
        return values[np.lexsort((values.imag, values.real))]

    @staticmethod
    def finite_section_spectrum(
        operator: BandOperator, radius: int, hermitian: Optional[bool] = None, max_rows: Optional[int] = None
    ) -> np.ndarray:
        """Eigenvalues of the box-window truncation; Hermitian path when the window matrix is Hermitian."""
        window = FiniteSectionService.truncate(operator, radius, max_rows)
        if hermitian is None:
            hermitian = FiniteSectionService.is_hermitian(window)
        values = FiniteSectionService.window_eigenvalues(window.matrix, hermitian)
        logger.debug("Finite section solved", rows=window.rows, radius=radius, hermitian=hermitian)
        return values

    @staticmethod
    def dump_matrix(window: WindowMatrix, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(matrix_dump_text(window))
        logger.info("Window matrix written", path=str(path), rows=window.rows)
        return path
