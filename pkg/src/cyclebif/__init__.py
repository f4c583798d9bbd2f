"""Bifurcation functions, averaging operators and degree computations for
periodically perturbed ODEs, cross-checked by shooting."""

__version__ = "0.1.0"
