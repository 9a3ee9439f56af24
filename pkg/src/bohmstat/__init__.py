"""Finite-ensemble statistics of Bohmian trajectories."""

__version__ = "0.1.0"
