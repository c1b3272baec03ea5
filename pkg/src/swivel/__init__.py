"""Swiveling-arm dynamics on the plane and on Riemannian surfaces."""

__version__ = "0.1.0"
