"""Meshfree RBF interpolation, RBF-FD solvers and a neural shape-parameter predictor."""

__version__ = "0.1.0"
