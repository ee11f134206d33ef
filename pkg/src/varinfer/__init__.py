"""Robust de-biased inference for high-dimensional VAR(1) transition matrices."""

__version__ = "0.1.0"
