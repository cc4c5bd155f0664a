"""Calculus on the Heisenberg group and numerical checks of Reilly-type identities."""

__version__ = "0.1.0"
