"""Finite-difference solver for the perturbed Schrodinger-Bopp-Podolsky system."""
__version__ = "0.1.0"
