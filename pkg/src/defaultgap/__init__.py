"""Recorded vs economic default times for firms driven by geometric Levy processes."""
__version__ = "0.1.0"

from .errors import DefaultGapError  # noqa: F401
