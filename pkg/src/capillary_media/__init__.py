"""Capillary interfaces in random 2-D porous media."""

__version__ = "0.1.0"
