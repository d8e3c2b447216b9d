"""Representational alignment between agents from their views of shared stimuli."""

__version__ = "0.1.0"
