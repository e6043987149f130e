"""Piecewise-polynomial density estimation with two-factor guarantees."""

__version__ = "0.1.0"
