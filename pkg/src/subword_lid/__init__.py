"""Subword-level language identification for intra-word code-switching."""

__version__ = "0.1.0"
