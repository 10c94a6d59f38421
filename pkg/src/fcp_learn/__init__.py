"""Sparse M-estimation with the minimax concave penalty."""
__version__ = "0.1.0"
