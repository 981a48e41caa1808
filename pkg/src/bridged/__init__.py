"""Bridged posteriors: Bayesian models whose latent variables are pinned to
the solution of an inner optimisation problem."""

__version__ = "0.1.0"
