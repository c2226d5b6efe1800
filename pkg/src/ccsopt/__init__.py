"""Bayesian optimization over stochastic surrogates, with a tank-model
CO2 storage scheduling proxy and a seeded experiment harness."""

__version__ = "0.1.0"
