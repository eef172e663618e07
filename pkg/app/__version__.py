"""Version information for lattice-spectra."""

__version__ = "0.4.1"
