"""Deterministic and random quantum features for RDM-based quantum kernels."""

__version__ = "0.1.0"
