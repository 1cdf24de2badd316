"""Bayesian inference from multiple synthetic data sets by posterior mixing."""

__version__ = "0.1.0"
