"""Latent addend and factor distributions of order statistics."""

__version__ = "0.1.0"
