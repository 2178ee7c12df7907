"""Numerical laboratory for type-1,1 pseudo-differential operators on the torus."""

__version__ = "0.1.0"
