"""Integrable but non-autonomous Hamiltonian maps of the disk and the braids of their fixed points."""

__version__ = "0.1.0"
