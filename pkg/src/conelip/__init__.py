"""Certified Lipschitz constants for convex maps into ordered vector spaces."""

__version__ = "0.1.0"
