"""Lattice Boltzmann solver for quasi-static linear elasticity on periodic domains."""

__version__ = "0.1.0"
