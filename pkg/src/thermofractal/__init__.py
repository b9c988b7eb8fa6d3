"""Thermodynamic formalism and multifractal spectra for full-branch interval maps."""

__version__ = "0.1.0"
