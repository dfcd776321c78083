"""Quasi-classical limits of Pauli-Fierz type models on truncated Fock spaces."""

__version__ = "0.1.0"
