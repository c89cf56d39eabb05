"""Exact simulation and verification toolkit for repeated two-player nonlocal games."""

__version__ = "0.1.0"
