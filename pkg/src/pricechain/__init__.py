"""Profit-maximizing prices for a chain of models sold to heterogeneous buyers."""

__version__ = "0.1.0"
