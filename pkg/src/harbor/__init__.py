"""Deterministic multi-agent English-auction simulation with persona-conditioned bidders."""

__version__ = "0.1.0"
