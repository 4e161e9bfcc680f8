"""Randers metrics on two-spheres of revolution from Zermelo navigation data."""

__version__ = "0.1.0"
