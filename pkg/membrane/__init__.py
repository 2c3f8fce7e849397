"""Membrane diffusion toolkit: simulation, PDE and potential solvers, verification."""

__version__ = "0.1.0"
