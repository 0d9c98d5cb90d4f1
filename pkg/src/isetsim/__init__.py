"""Simulation of a superdeterministic hidden-variable model for spin-1/2 systems."""

__version__ = "0.1.0"
