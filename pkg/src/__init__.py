"""Twinned graph encodings of compact dynamical systems."""

__version__ = "0.1.0"
