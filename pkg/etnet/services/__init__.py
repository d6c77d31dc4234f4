"""Numerical core, networks, mixture model, data generation and evaluation."""
