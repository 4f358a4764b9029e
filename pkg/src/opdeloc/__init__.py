"""Operator delocalization in graph SYK2 models and SYK-like quantum batteries."""

__version__ = "0.1.0"
