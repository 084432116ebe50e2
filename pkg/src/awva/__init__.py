"""Weak-value amplification simulator: WVA and auto-correlative AWVA delay estimation."""

__version__ = "0.1.0"
