"""Poisson-Gaussian mixture processes: simulation, exact MCMC inference and prediction."""

from .distributions import FDist, fdist_cov, fdist_logdensity, fdist_sample, gp_conditional, mvn_logdensity
from .errors import PogampError
from .geometry import Domain, partition_domain
from .kernels import CovKernel
from .linalg import InverseCache, inverse_add, inverse_remove
from .mcmc import PogampState, SamplerConfig, initial_state, run_gibbs
from .model import PogampDraw, PogampModel, rn_weight, simulate
from .pointprocess import Intensity, pp_logdensity, pp_sample
from .priors import Prior, PriorSpec, pc_prior_logdensity

__version__ = "0.1.0"

__all__ = [
    "CovKernel",
    "Domain",
    "FDist",
    "Intensity",
    "InverseCache",
    "PogampDraw",
    "PogampError",
    "PogampModel",
    "PogampState",
    "Prior",
    "PriorSpec",
    "SamplerConfig",
    "fdist_cov",
    "fdist_logdensity",
    "fdist_sample",
    "gp_conditional",
    "initial_state",
    "inverse_add",
    "inverse_remove",
    "mvn_logdensity",
    "partition_domain",
    "pc_prior_logdensity",
    "pp_logdensity",
    "pp_sample",
    "rn_weight",
    "run_gibbs",
    "simulate",
]
