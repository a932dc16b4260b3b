"""Intrinsic Diophantine approximation on rational IFS fractals."""

__version__ = "0.1.0"
