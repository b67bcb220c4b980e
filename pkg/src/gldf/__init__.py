"""Linear voltage models for multiphase distribution networks."""

__version__ = "0.1.0"
