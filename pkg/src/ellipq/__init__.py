"""Elliptic Poisson algebras, their quantizations and bosonizations, evaluated numerically."""

__version__ = "0.1.0"
