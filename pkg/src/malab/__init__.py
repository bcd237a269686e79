"""Exact and numerical checks for major arc orthogonality, sunflower combinatorics and adelic sampling."""

__version__ = "0.1.0"
