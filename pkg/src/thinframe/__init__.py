"""Executable comparison geometry, flat surfaces and random walks on the torus Teichmuller space."""

__version__ = "0.1.0"
