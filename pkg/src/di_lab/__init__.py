"""Deterministic identification (DI) codes over parametric channels."""
__version__ = "0.1.0"
