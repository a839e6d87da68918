"""Toric-code loop-gas phase-transition laboratory."""

__version__ = "0.1.0"
