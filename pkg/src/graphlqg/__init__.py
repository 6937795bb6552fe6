"""Distributed Kalman filtering and feedforward control over directed graphs."""
__version__ = "0.1.0"
