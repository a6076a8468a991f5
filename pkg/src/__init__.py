"""Slicekit - Adaptive Food Cutting Toolkit"""

__version__ = "0.1.0"
