"""Vendor-aware Structured Text generation with a built-in multi-dialect checker."""

__version__ = "0.1.0"
