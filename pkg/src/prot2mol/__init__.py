"""Targeted molecule generation as protein-to-chemical translation."""

__version__ = "0.1.0"
