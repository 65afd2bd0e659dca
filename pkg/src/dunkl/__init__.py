"""Radial Dunkl processes attached to dihedral root systems."""

__version__ = "0.1.0"

__all__ = [
    "cli",
    "config",
    "dihedral",
    "errors",
    "hermite",
    "hitting",
    "output",
    "series",
    "simulate",
    "specfun",
    "spectral",
    "validate",
]
