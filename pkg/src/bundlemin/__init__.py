"""Fibre-preserving dynamics on graph bundles over minimal base systems."""

from .errors import BundleMinError

__all__ = ["BundleMinError"]
__version__ = "0.1.0"
