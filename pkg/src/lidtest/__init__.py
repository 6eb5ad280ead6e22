"""Simulation and verification lab for the two-prover low individual degree test."""

__version__ = "0.1.0"
