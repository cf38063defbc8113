"""Renormalized volume toolkit: fundamental forms at infinity, Epstein surfaces,
Schwarzians, discrete Liouville uniformization and W-volumes."""

__version__ = "0.1.0"
