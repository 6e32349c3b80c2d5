"""Quantum-fuzzy neural networks for binary sentiment classification."""

__version__ = "0.1.0"
