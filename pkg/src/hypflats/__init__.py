"""Simulation and exact moment formulas for Poisson hyperplane processes in hyperbolic space."""

__version__ = "0.1.0"
