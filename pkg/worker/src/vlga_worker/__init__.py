"""Trainer worker speaking the line-based JSON evaluation protocol."""

__version__ = "0.1.0"
