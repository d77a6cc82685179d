"""Dirichlet reparameterizations, functional-equation residual checks,
parameter-independence testing, and Bayesian-network scoring."""

__version__ = "0.1.0"
