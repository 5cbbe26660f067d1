"""Numerical laboratory for laws of the single logarithm on two-parameter i.i.d. fields."""

__version__ = "0.1.0"
