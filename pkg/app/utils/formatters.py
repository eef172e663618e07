"""Text formatting utilities."""

from typing import Iterable, Sequence

import numpy as np

from app.constants import REPORT_FORMAT_VERSION, REPORT_PROJECT_NAME, SIGNIFICANT_DIGITS
from app.utils.intervals import Interval, IntervalUnion


def format_number(x: float) -> str:
    """
    Format a real number with 12 significant digits.

    Examples:
        1.0          -> 1
        0.5857864376 -> 0.585786437627
        -0.0         -> 0

    Args:
        x: The number

    Returns:
        Locale-independent decimal string
    """
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, f".{SIGNIFICANT_DIGITS}g")


def format_complex(z: complex) -> str:
    """
    Format a complex number, dropping the imaginary part when it is exactly zero.

    Examples:
        2+0j   -> 2
        1-0.5j -> 1-0.5i
    """
    z = complex(z)
    if z.imag == 0.0:
        return format_number(z.real)
    sign = "-" if z.imag < 0 else "+"
    return f"{format_number(z.real)}{sign}{format_number(abs(z.imag))}i"


def format_interval(interval: Interval) -> str:
    a, b = interval
    return f"[{format_number(a)}, {format_number(b)}]"


def format_open_interval(interval: Interval) -> str:
    a, b = interval
    return f"({format_number(a)}, {format_number(b)})"


def format_union(union: IntervalUnion) -> str:
    """
    Format an interval union on one line.

    Examples:
        [-1, 1]
        [0.585786437627, 1] U [3, 3.41421356237]
        {}
    """
    if union.is_empty:
        return "{}"
    return " U ".join(format_interval(interval) for interval in union)


def format_cell(cell: Sequence[int]) -> str:
    return "[" + ", ".join(str(int(c)) for c in cell) + "]"


def format_angles(angles: Iterable[float]) -> str:
    return "(" + ", ".join(format_number(a) for a in angles) + ")"


def format_matrix(matrix: np.ndarray) -> str:
    """Rows separated by '; ', entries by ', '."""
    return "[" + "; ".join(", ".join(format_complex(z) for z in row) for row in np.atleast_2d(matrix)) + "]"


def report_header(command: str) -> str:
    """
    First line of every report.

    Examples:
        # lattice-spectra bands v1
    """
    return f"# {REPORT_PROJECT_NAME} {command} v{REPORT_FORMAT_VERSION}"
