"""Thermodynamic formalism for countable Markov shifts and suspension flows."""

__version__ = "0.1.0"
