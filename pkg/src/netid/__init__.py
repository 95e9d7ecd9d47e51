"""Identification and estimation tools for strategic network formation with fixed effects."""

__version__ = "0.1.0"
