"""Gaussian Measurement Toolkit."""

__version__ = "0.1.0"
