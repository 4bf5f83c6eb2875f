"""The POGAMP model and its hierarchical simulator."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .distributions import FDist, fdist_logdensity_cached, fdist_sample, mvn_logdensity_cached, mvn_sample
from .geometry import Domain, as_locations
from .kernels import CovKernel
from .linalg import InverseCache, cholesky
from .pointprocess import Intensity, pp_logdensity, pp_sample


@dataclass(frozen=True)
class PogampModel:
    """Base GP kernel, f distribution and Poisson intensity on a rectangle."""

    domain: Domain
    kernel: CovKernel
    f: FDist
    intensity: Intensity

    @classmethod
    def matched(cls, domain, kernel, family="skew_t", alpha=0.0, nu=None, intensity=None):
        """Model whose f reuses the base kernel for location and scale."""
        intensity = Intensity.homogeneous(1.0) if intensity is None else intensity
        return cls(domain, kernel, FDist(family, kernel, alpha=alpha, nu=nu), intensity)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_rate(self, rate):
        return self.replace(intensity=Intensity.homogeneous(rate))

    @property
    def shares_kernel(self):
        return self.f.kernel == self.kernel


@dataclass
class PogampDraw:
    events: np.ndarray
    y_n: np.ndarray
    y_r: np.ndarray


def simulate(rng, model, s_r):
    """Draw N, then Y at the events from f, then Y at ``s_r`` from the base GP given them."""
    s_r = as_locations(s_r)
    kernel = model.kernel
    events = pp_sample(rng, model.intensity, model.domain)
    if events.shape[0] == 0:
        y_r = mvn_sample(rng, np.full(s_r.shape[0], kernel.mean), kernel.matrix(s_r))
        return PogampDraw(events, np.zeros(0), y_r)
    chol = cholesky(kernel.matrix(events))
    y_n = fdist_sample(rng, model.f, events, chol=chol if model.shares_kernel else None)
    w = solve_triangular(chol, kernel.cross(events, s_r), lower=True)  # |N| x r
    z = solve_triangular(chol, y_n - kernel.mean, lower=True)
    mean = kernel.mean + w.T @ z
    cov = kernel.matrix(s_r) - w.T @ w
    y_r = mvn_sample(rng, mean, 0.5 * (cov + cov.T))
    return PogampDraw(events, y_n, y_r)


def simulate_replicates(rng, model, s_r, replicates):
    """Independent draws of Y at ``s_r``; returns (event counts, values of shape (replicates, r))."""
    s_r = as_locations(s_r)
    counts = np.empty(replicates, dtype=int)
    values = np.empty((replicates, s_r.shape[0]))
    for i in range(replicates):
        draw = simulate(rng, model, s_r)
        counts[i] = draw.events.shape[0]
        values[i] = draw.y_r
    return counts, values


def log_rn_weight(model, events, y_n, reference_rate=None):
    """log (f/g)(Y_N), with g the base-GP normal at the events.

    By default the reference measure shares the model's Poisson process, so
    only Y_N contributes. With ``reference_rate`` the reference process is
    homogeneous at that rate and the point-process likelihood ratio is added.
    """
    events = as_locations(events)
    pp_term = 0.0
    if reference_rate is not None:
        pp_term = pp_logdensity(events, model.intensity, model.domain) - pp_logdensity(
            events, Intensity.homogeneous(reference_rate), model.domain
        )
    if events.shape[0] == 0:
        return pp_term
    g_cache = InverseCache.from_locations(events, model.kernel)
    f_cache = g_cache if model.shares_kernel else InverseCache.from_locations(events, model.f.kernel)
    y_n = np.asarray(y_n, dtype=float)
    log_f = fdist_logdensity_cached(model.f, y_n, f_cache)
    return pp_term + log_f - mvn_logdensity_cached(y_n - model.kernel.mean, g_cache)


def rn_weight(model, events, y_n, reference_rate=None):
    """Radon-Nikodym derivative of the POGAMP w.r.t. the augmented GP at (N, Y_N)."""
    return float(np.exp(log_rn_weight(model, events, y_n, reference_rate)))
