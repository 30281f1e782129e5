"""Spatial entanglement of Hooke's atom: exact and DFT-based methods."""

__version__ = "0.1.0"
