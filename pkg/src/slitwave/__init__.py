"""Numerical laboratory for quantum diffraction at planar slit patterns."""

__version__ = "0.1.0"
