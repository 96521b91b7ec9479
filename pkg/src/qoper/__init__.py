"""Numerical toolkit for QQ-systems, Bethe equations and Miura q-opers."""

__version__ = "0.1.0"
