"""Masked Consensus - privacy-preserving dynamic average consensus simulator."""

__version__ = "0.1.0"
