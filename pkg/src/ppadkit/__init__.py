"""Exact-rational toolkit for the Brouwer -> generalized circuit -> bimatrix chain."""

__version__ = "0.1.0"
