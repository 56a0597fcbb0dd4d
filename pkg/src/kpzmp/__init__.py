"""Multipoint distributions of TASEP and the KPZ fixed point from general initial data."""

__version__ = "0.1.0"
