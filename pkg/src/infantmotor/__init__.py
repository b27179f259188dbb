"""Classify infant day-long leg-movement records as typically developing (TD) or at risk (AR)."""

__version__ = "0.1.0"
