"""Techno-economic simulator for a light-pipe daylit container vertical farm."""

__version__ = "0.1.0"
