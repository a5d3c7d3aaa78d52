"""Meso-scale asymptotics for the Dirichlet Laplacian in domains with many small holes."""

__version__ = "0.1.0"
