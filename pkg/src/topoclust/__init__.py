"""Topological clustering from local Vietoris-Rips Betti sequences."""

__version__ = "0.1.0"
