"""Dual Baxter equations, deformed Abelian differentials and their periods."""

__version__ = "0.1.0"
