"""Posterior prediction at new sites and Monte Carlo estimates of integral functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import gp_conditional
from .errors import OutOfDomain
from .geometry import as_locations, partition_domain
from .nngp import nngp_predictive_mean, nngp_sample


def _identity(**_):
    return lambda y: y


def _square(**_):
    return lambda y: y * y


def _indicator_above(threshold, **_):
    return lambda y: (y > threshold).astype(float)


def _constant(c, **_):
    return lambda y: np.full(np.shape(y), float(c))


INTEGRANDS = {
    "identity": _identity,
    "square": _square,
    "indicator_above": _indicator_above,
    "constant": _constant,
}


def integrand(name, **params):
    """Pointwise function g from the registry (``threshold`` or ``c`` where needed)."""
    if name not in INTEGRANDS:
        raise ValueError(f"unknown integrand {name!r}; expected one of {sorted(INTEGRANDS)}")
    return INTEGRANDS[name](**params)


@dataclass(frozen=True)
class PredictiveRequest:
    """Either ``kind="sites"`` with ``sites``, or ``kind="integral"`` with an integrand and strata."""

    kind: str
    sites: np.ndarray | None = None
    integrand: str = "identity"
    params: dict = field(default_factory=dict)
    strata: int = 1
    points: int = 1

    def __post_init__(self):
        if self.kind not in ("sites", "integral"):
            raise ValueError("kind must be 'sites' or 'integral'")
        if self.kind == "sites" and (self.sites is None or as_locations(self.sites).shape[0] == 0):
            raise ValueError("a sites request needs at least one site")
        if self.kind == "integral":
            integrand(self.integrand, **self.params)
            if self.strata < 1 or self.points < 1:
                raise ValueError("strata and points must be positive")


def _check_sites(chain, sites):
    dom = chain.initial.domain
    if not np.all(dom.contains(sites, tol=1e-12)):
        raise OutOfDomain("prediction sites must lie inside the domain")


def _nngp_index(chain):
    nc = chain.initial.nngp
    return None if nc is None else nc.index


def predictive_samples(rng, chain, sites):
    """One draw of Y(sites) per retained MCMC draw, given (Y_N, Y_o, theta_G) of that draw.

    Returns an array of shape (len(chain), |sites|). With an NNGP chain each
    site is drawn from its m mesh neighbours and Y_N.
    """
    sites = as_locations(sites)
    if len(chain) == 0:
        raise ValueError("the chain has no retained draws")
    _check_sites(chain, sites)
    obs, y_o = chain.initial.obs_locs, chain.initial.y_o
    index = _nngp_index(chain)
    out = np.empty((len(chain), sites.shape[0]))
    for j in range(len(chain)):
        kernel, _, events, y_n, y_mesh = chain.draw_state(j)
        if index is not None:
            out[j] = nngp_sample(rng, sites, index, y_n, events, kernel, y_mesh)
            continue
        cond = gp_conditional(sites, np.vstack([events, obs]), np.concatenate([y_n, y_o]), kernel)
        out[j] = cond.sample(rng)
    return out


def kriging_means(chain, sites, nngp_index=None):
    """Per-draw conditional mean E[Y(sites) | Y_N, Y_o, theta] (exact, or NNGP with the mesh integrated out)."""
    sites = as_locations(sites)
    obs, y_o = chain.initial.obs_locs, chain.initial.y_o
    out = np.empty((len(chain), sites.shape[0]))
    for j in range(len(chain)):
        kernel, _, events, y_n, _ = chain.draw_state(j)
        if nngp_index is None:
            out[j] = gp_conditional(sites, np.vstack([events, obs]), np.concatenate([y_n, y_o]), kernel).mean
        else:
            out[j] = nngp_predictive_mean(nngp_index, kernel, events, y_n, obs, y_o, sites)
    return out


def predictive_summary(draws, quantiles=(0.025, 0.5, 0.975)):
    """Column-wise mean, sd and quantiles of predictive draws."""
    draws = np.asarray(draws, dtype=float)
    out = {"mean": draws.mean(axis=0), "sd": draws.std(axis=0, ddof=1) if len(draws) > 1 else np.zeros(draws.shape[1])}
    for q in quantiles:
        out[f"q{q:g}"] = np.quantile(draws, q, axis=0)
    return out


@dataclass(frozen=True)
class FunctionalEstimate:
    value: float
    se: float
    per_draw: np.ndarray


def functional_estimate(rng, chain, g, strata=1, points=1):
    """Unbiased estimate of the posterior mean of int_S g(Y(s)) ds.

    The domain is split into ``strata`` equal squares. For each retained draw,
    ``points`` uniform sites per square are unveiled jointly from the
    conditional law given (Y_N, Y_o) and discarded afterwards; the draw's
    estimate is the sum over squares of area times the average of g. ``g``
    is a callable or a registry name.
    """
    if strata < 1 or points < 1:
        raise ValueError("strata and points must be positive")
    if len(chain) == 0:
        raise ValueError("the chain has no retained draws")
    g = integrand(g) if isinstance(g, str) else g
    cells = partition_domain(chain.initial.domain, strata)
    obs, y_o = chain.initial.obs_locs, chain.initial.y_o
    index = _nngp_index(chain)
    areas = np.repeat([c.area for c in cells], points)
    per_draw = np.empty(len(chain))
    for j in range(len(chain)):
        kernel, _, events, y_n, y_mesh = chain.draw_state(j)
        u = np.vstack([c.uniform(rng, points) for c in cells])
        if index is not None:
            y = nngp_sample(rng, u, index, y_n, events, kernel, y_mesh)
        else:
            y = gp_conditional(u, np.vstack([events, obs]), np.concatenate([y_n, y_o]), kernel).sample(rng)
        per_draw[j] = float(np.sum(areas * g(y)) / points)
    n = per_draw.size
    se = float(per_draw.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return FunctionalEstimate(float(per_draw.mean()), se, per_draw)
