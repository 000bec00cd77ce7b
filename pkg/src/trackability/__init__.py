"""Exact-enumeration laboratory for tracking integer-valued processes over noisy channels."""

__version__ = "0.1.0"
