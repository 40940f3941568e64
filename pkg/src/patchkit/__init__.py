"""Microstrip patch antenna design, stacked dual-band tuning and FDTD verification."""

__version__ = "0.1.0"
