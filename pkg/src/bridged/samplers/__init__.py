"""MCMC samplers for bridged posteriors and their baselines."""
from bridged.samplers.baselines import canonical_cox_gibbs, gibbs_latent_normal
from bridged.samplers.core import AdaptationConfig, ChainState, Trace, mala, rw_metropolis
from bridged.samplers.discrete import discrete_gibbs

__all__ = [
    "AdaptationConfig",
    "ChainState",
    "Trace",
    "canonical_cox_gibbs",
    "discrete_gibbs",
    "gibbs_latent_normal",
    "mala",
    "rw_metropolis",
]
