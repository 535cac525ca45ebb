"""Markov chain mixing-time and hitting-time laboratory."""

__version__ = "0.1.0"
