"""Radial Keller-Segel solver and pointwise blow-up envelope checks."""

__version__ = "0.1.0"
