"""Hyperbolize: map Euclidean wallpaper ornaments into the Poincare disk."""

__version__ = "0.1.0"
