"""Authoring engine that turns learning content into interactive HTML
simulations through a chain of editable graph abstractions."""

__version__ = "0.1.0"
