"""Numerical verification of almost quasi-Yamabe soliton identities."""

__version__ = "0.1.0"
