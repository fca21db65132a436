"""Fusion systems, bisets and perfect localities for small finite groups."""

__version__ = "0.1.0"
SCHEMA = "locality-forge/1"
