"""Verified symbolic state tracking for theory-of-mind narratives."""

__version__ = "0.1.0"
