"""Spectra and essential spectra of band operators on Z^n-periodic graphs."""
