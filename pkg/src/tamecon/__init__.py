"""Finite universal algebra toolkit: congruences, centrality, tame congruence types,
structural verifiers, and graph-interpretation gadgets."""

__version__ = "0.1.0"
