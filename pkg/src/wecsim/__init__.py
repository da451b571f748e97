"""Isolated wind-generator bus simulator with PD and neuro-fuzzy frequency regulators."""

__version__ = "0.1.0"
