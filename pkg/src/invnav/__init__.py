"""Invariant-set self-navigation for unicycle agents."""
__version__ = "0.1.0"
