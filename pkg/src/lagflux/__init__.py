"""Exact bounds and chord-flow certificates for Lagrangian invariants."""

__version__ = "0.1.0"
