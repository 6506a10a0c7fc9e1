"""Tangent-bundle geometry of a Riemannian chart, with numerical verification tools."""

__version__ = "0.1.0"
