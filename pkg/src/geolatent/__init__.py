"""Latent-space parametrization of constrained geometry deformations."""

__version__ = "0.1.0"
