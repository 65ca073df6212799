"""Constrained Bayesian networks: models whose probability-table entries
are symbolic real-arithmetic terms governed by constraints, with symbolic
junction-tree inference, may/must judgment checking through a decision
procedure, rigorous interval optimization, composition, and sensitivity
analysis."""

__version__ = "0.1.0"
