"""Runtime configuration."""

import os
from dataclasses import dataclass

from app.constants import (
    DEFAULT_GRID,
    DEFAULT_LIMIT_TOL,
    DEFAULT_MAX_BOXES,
    DEFAULT_MAX_WINDOW_ROWS,
    DEFAULT_SAMPLE_RADIUS,
    DEFAULT_STABILITY_RUN,
    DEFAULT_TOL,
)


@dataclass
class Config:
    """Engine configuration."""

    # Symbol engine
    grid: int
    tol: float
    max_boxes: int

    # Operator algebra
    sample_radius: int  # Window radius used to sample rule-based coefficients

    # Limit operators
    limit_tol: float
    stability_run: int

    # Finite sections
    max_window_rows: int

    # Logging
    log_level: str

    @classmethod
    def from_env(cls) -> "Config":
        """Load configuration from environment variables."""
        return cls(
            grid=int(os.getenv("SPECTRA_GRID", str(DEFAULT_GRID))),
            tol=float(os.getenv("SPECTRA_TOL", str(DEFAULT_TOL))),
            max_boxes=int(os.getenv("SPECTRA_MAX_BOXES", str(DEFAULT_MAX_BOXES))),
            sample_radius=int(os.getenv("SPECTRA_SAMPLE_RADIUS", str(DEFAULT_SAMPLE_RADIUS))),
            limit_tol=float(os.getenv("SPECTRA_LIMIT_TOL", str(DEFAULT_LIMIT_TOL))),
            stability_run=int(os.getenv("SPECTRA_STABILITY_RUN", str(DEFAULT_STABILITY_RUN))),
            max_window_rows=int(os.getenv("SPECTRA_MAX_WINDOW_ROWS", str(DEFAULT_MAX_WINDOW_ROWS))),
            log_level=os.getenv("LOG_LEVEL", "WARNING"),
        )

    def validate(self):
        """Validate configuration."""
        if self.grid < 2:
            raise ValueError("SPECTRA_GRID must be at least 2")
        if self.tol <= 0:
            raise ValueError("SPECTRA_TOL must be positive")
        if self.max_boxes < 1:
            raise ValueError("SPECTRA_MAX_BOXES must be positive")
        if self.sample_radius < 1:
            raise ValueError("SPECTRA_SAMPLE_RADIUS must be positive")
        if self.limit_tol <= 0:
            raise ValueError("SPECTRA_LIMIT_TOL must be positive")
        if self.stability_run < 1:
            raise ValueError("SPECTRA_STABILITY_RUN must be positive")
        if self.max_window_rows < 1:
            raise ValueError("SPECTRA_MAX_WINDOW_ROWS must be positive")


# Global config instance
config = Config.from_env()
