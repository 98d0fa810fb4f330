"""Guided generation of graph topologies with discrete diffusion and persistence-based edits."""

__version__ = "0.1.0"
