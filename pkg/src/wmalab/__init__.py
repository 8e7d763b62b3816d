"""Numerical laboratory for weighted Monge-Ampere energies on P^1 and toric surfaces."""

__version__ = "0.1.0"
