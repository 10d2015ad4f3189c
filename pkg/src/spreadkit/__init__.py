"""Spread distributions on spanning structures, with exact oracles."""
__version__ = "0.1.0"
