"""Closeness centrality estimation for large graphs."""

__version__ = "0.1.0"
