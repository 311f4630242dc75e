"""Occupancy toolkit: ground-truth generation, evaluation, decoder kernels and planning."""

__version__ = "0.1.0"
