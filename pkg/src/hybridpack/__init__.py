"""Hybrid energy/power battery pack simulator with pulse charging and cluster rest scheduling."""

__version__ = "0.1.0"
