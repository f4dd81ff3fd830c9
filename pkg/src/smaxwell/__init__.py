"""Numerical toolkit for equivariant semilinear curl-curl problems on periodic grids."""

__version__ = "0.1.0"
