"""Prior distributions for the sampler, including the penalised-complexity prior on f."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, stats

from .distributions import marginal_logpdf
from .errors import DerivativeDegenerate, QuadratureFailure

KLD_TOL = 1e-8
FD_STEP = 1e-4


def kld_1d(logpdf_p, logpdf_q, lower=-np.inf, upper=np.inf, tol=KLD_TOL):
    """KL(p || q) for univariate densities by adaptive quadrature."""

    def integrand(x):
        lp = float(logpdf_p(x))
        if not np.isfinite(lp):
            return 0.0
        return math.exp(lp) * (lp - float(logpdf_q(x)))

    value, err = integrate.quad(integrand, lower, upper, epsabs=tol, epsrel=tol, limit=400)
    if not np.isfinite(value) or err > 10 * tol * max(1.0, abs(value)):
        raise QuadratureFailure(f"KL quadrature gave {value} with error estimate {err}")
    return max(value, 0.0)


class PCPriorValue(NamedTuple):
    logdensity: float
    distance: float
    boundary: bool  # xi == xi0: the derivative is one-sided


def f_marginal_family(f, param):
    """Map xi -> one-site marginal log density of f with ``param`` set to xi."""

    def family(xi):
        g = f.replace(**{param: xi})
        return lambda x: marginal_logpdf(g, x)

    return family


def pc_prior(xi, xi0, zeta, family: Callable):
    """Penalised-complexity prior density on a complexity parameter.

    ``family(xi)`` returns the univariate log density indexed by xi. The
    density is ``zeta * exp(-zeta * d) * |dd/dxi|`` with
    ``d = sqrt(2 KL(f_xi || f_xi0))``; the derivative is a central finite
    difference, one-sided when xi sits at (or within a step of) xi0 or the
    edge of the family's valid range.
    """
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    base = family(xi0)

    def dist(x):
        if x == xi0:
            return 0.0
        return math.sqrt(2.0 * kld_1d(family(x), base))

    h = FD_STEP * abs(xi) if xi != 0 else FD_STEP
    d = dist(xi)
    boundary = xi == xi0

    def safe(x):
        try:
            return dist(x)
        except ValueError:
            return None

    if boundary:
        up = safe(xi + h)
        if up is not None:
            deriv = up / h
        else:
            deriv = -safe(xi - h) / h
    elif abs(xi - xi0) <= h:
        # stay on xi's side of xi0, where d is smooth
        step = 0.5 * abs(xi - xi0)
        other = xi + step if xi > xi0 else xi - step
        deriv = (safe(other) - d) / (other - xi)
    else:
        hi, lo = safe(xi + h), safe(xi - h)
        if hi is not None and lo is not None:
            deriv = (hi - lo) / (2 * h)
        elif hi is not None:
            deriv = (hi - d) / h
        else:
            deriv = (d - lo) / h
    if abs(deriv) < 1e-12:
        raise DerivativeDegenerate(f"|dd/dxi| = {abs(deriv):.3g} at xi={xi}")
    return PCPriorValue(math.log(zeta) - zeta * d + math.log(abs(deriv)), d, boundary)


def pc_prior_logdensity(xi, xi0, zeta, family):
    return pc_prior(xi, xi0, zeta, family).logdensity


@dataclass(frozen=True)
class Prior:
    """A univariate prior; ``kind`` is one of :data:`PRIOR_KINDS`.

    Parameters by kind: normal(mean, sd), lognormal(meanlog, sdlog),
    gamma(shape, rate), uniform(low, high), halfnormal(sd) and
    pc(xi0, zeta). A pc prior needs the f distribution it refers to.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}; expected one of {PRIOR_KINDS}")
        missing = set(PRIOR_KINDS[self.kind]) - set(self.params)
        extra = set(self.params) - set(PRIOR_KINDS[self.kind])
        if missing or extra:
            raise ValueError(f"{self.kind} prior takes {PRIOR_KINDS[self.kind]}, got {sorted(self.params)}")
        for name, v in self.params.items():
            if not np.isfinite(v):
                raise ValueError(f"prior parameter {name} must be finite")
        p = self.params
        positive = {"normal": ["sd"], "lognormal": ["sdlog"], "gamma": ["shape", "rate"],
                    "halfnormal": ["sd"], "pc": ["zeta"]}.get(self.kind, [])
        if any(p[k] <= 0 for k in positive):
            raise ValueError(f"{self.kind} prior needs positive {positive}")
        if self.kind == "uniform" and not p["high"] > p["low"]:
            raise ValueError("uniform prior needs high > low")

    def logpdf(self, x, f=None, param=None):
        p = self.params
        if self.kind == "normal":
            return float(stats.norm.logpdf(x, p["mean"], p["sd"]))
        if self.kind == "lognormal":
            if x <= 0:
                return -math.inf
            return float(stats.lognorm.logpdf(x, p["sdlog"], scale=math.exp(p["meanlog"])))
        if self.kind == "gamma":
            return float(stats.gamma.logpdf(x, p["shape"], scale=1.0 / p["rate"]))
        if self.kind == "uniform":
            return float(stats.uniform.logpdf(x, p["low"], p["high"] - p["low"]))
        if self.kind == "halfnormal":
            return float(stats.halfnorm.logpdf(x, scale=p["sd"]))
        if f is None or param is None:
            raise ValueError("a pc prior needs the f distribution and parameter name")
        return pc_prior_logdensity(x, p["xi0"], p["zeta"], f_marginal_family(f, param))

    @property
    def mean(self):
        p = self.params
        return {
            "normal": lambda: p["mean"],
            "lognormal": lambda: math.exp(p["meanlog"] + 0.5 * p["sdlog"] ** 2),
            "gamma": lambda: p["shape"] / p["rate"],
            "uniform": lambda: 0.5 * (p["low"] + p["high"]),
            "halfnormal": lambda: p["sd"] * math.sqrt(2 / math.pi),
            "pc": lambda: p["xi0"],
        }[self.kind]()


PRIOR_KINDS = {
    "normal": ("mean", "sd"),
    "lognormal": ("meanlog", "sdlog"),
    "gamma": ("shape", "rate"),
    "uniform": ("low", "high"),
    "halfnormal": ("sd",),
    "pc": ("xi0", "zeta"),
}


def default_theta_g_priors():
    return {
        "mean": Prior("normal", {"mean": 0.0, "sd": 10.0}),
        "sigma2": Prior("lognormal", {"meanlog": 0.0, "sdlog": 1.5}),
        "phi": Prior("lognormal", {"meanlog": 0.0, "sdlog": 1.5}),
        "tau2": Prior("lognormal", {"meanlog": math.log(0.1), "sdlog": 1.5}),
    }


def default_theta_f_priors():
    return {
        "alpha": Prior("normal", {"mean": 0.0, "sd": 3.0}),
        "nu": Prior("gamma", {"shape": 2.0, "rate": 0.1}),
    }


@dataclass
class PriorSpec:
    """Priors for (lambda, theta_G, theta_f, theta_lambda).

    ``lambda_shape``/``lambda_rate`` define the conjugate Gamma prior of a
    homogeneous rate. ``theta_f`` holds priors for the f-only parameters
    (and for the f kernel when it is not shared with the base GP).
    """

    lambda_shape: float = 2.0
    lambda_rate: float = 1.0
    theta_g: dict = field(default_factory=default_theta_g_priors)
    theta_f: dict = field(default_factory=default_theta_f_priors)
    theta_lambda: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.lambda_shape > 0 and self.lambda_rate > 0):
            raise ValueError("lambda prior needs positive shape and rate")
        if not (math.isfinite(self.lambda_shape) and math.isfinite(self.lambda_rate)):
            raise ValueError("lambda prior hyperparameters must be finite")

    @property
    def lambda_mean(self):
        return self.lambda_shape / self.lambda_rate
