"""Stein's method bounds for exponential approximation, with simulators and exact oracles."""

__version__ = "0.1.0"
