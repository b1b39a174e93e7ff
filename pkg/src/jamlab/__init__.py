"""Desk-scale GNSS jamming classification lab."""

__version__ = "0.1.0"
