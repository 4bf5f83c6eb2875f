"""Poisson processes on a rectangle: sampling, log-density and integrated intensity."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure, UnboundedIntensity
from .geometry import as_locations


@dataclass(frozen=True)
class IntensityForm:
    """A closed-form parametric intensity lambda(s; theta)."""

    evaluate: Callable  # (locs, params, domain) -> rates
    positive: tuple  # parameter names sampled on the log scale
    integral: Callable | None = None  # (params, domain) -> Lambda_S
    bound: Callable | None = None  # (params, domain) -> sup over the domain


def _linear_eval(locs, p, d):
    return p["a"] + p["b"] * (locs[:, 0] - d.x_min) / d.width


def _loglinear_eval(locs, p, d):
    return np.exp(p["b0"] + p["b1"] * locs[:, 0] + p["b2"] * locs[:, 1])


def _axis_exp_integral(b, lo, hi):
    if abs(b) < 1e-12:
        return hi - lo
    return (math.exp(b * hi) - math.exp(b * lo)) / b


def _loglinear_integral(p, d):
    return (
        math.exp(p["b0"])
        * _axis_exp_integral(p["b1"], d.x_min, d.x_max)
        * _axis_exp_integral(p["b2"], d.y_min, d.y_max)
    )


def _loglinear_bound(p, d):
    x = d.x_max if p["b1"] > 0 else d.x_min
    y = d.y_max if p["b2"] > 0 else d.y_min
    return math.exp(p["b0"] + p["b1"] * x + p["b2"] * y)


def _bump_eval(locs, p, d):
    r2 = (locs[:, 0] - p["cx"]) ** 2 + (locs[:, 1] - p["cy"]) ** 2
    return p["base"] + p["height"] * np.exp(-0.5 * r2 / p["h"] ** 2)


FORMS = {
    "constant": IntensityForm(
        evaluate=lambda locs, p, d: np.full(locs.shape[0], float(p["c"])),
        positive=("c",),
        integral=lambda p, d: p["c"] * d.area,
        bound=lambda p, d: p["c"],
    ),
    # a + b * (x - x_min) / width
    "linear_x": IntensityForm(
        evaluate=_linear_eval,
        positive=("a", "b"),
        integral=lambda p, d: d.area * (p["a"] + 0.5 * p["b"]),
        bound=lambda p, d: p["a"] + p["b"],
    ),
    "loglinear": IntensityForm(
        evaluate=_loglinear_eval,
        positive=(),
        integral=_loglinear_integral,
        bound=_loglinear_bound,
    ),
    # base + height * exp(-|s - c|^2 / (2 h^2)); integral left to quadrature
    "gaussian_bump": IntensityForm(
        evaluate=_bump_eval,
        positive=("base", "height", "h"),
        integral=None,
        bound=lambda p, d: p["base"] + p["height"],
    ),
}


@dataclass(frozen=True)
class Intensity:
    """Homogeneous rate, or a parametric ``form`` from :data:`FORMS` (or a custom ``fn``)."""

    kind: str = "homogeneous"
    rate: float = 1.0
    form: str | None = None
    params: Mapping = field(default_factory=dict)
    lambda_bar: float | None = None
    fn: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("homogeneous", "parametric"):
            raise ValueError(f"unknown intensity kind {self.kind!r}")
        if self.kind == "homogeneous" and not self.rate >= 0:
            raise ValueError("rate must be non-negative")
        if self.kind == "parametric" and self.fn is None and self.form not in FORMS:
            raise ValueError(f"unknown intensity form {self.form!r}; expected one of {sorted(FORMS)}")

    @classmethod
    def homogeneous(cls, rate):
        return cls("homogeneous", rate=float(rate))

    @classmethod
    def parametric(cls, form, lambda_bar=None, **params):
        return cls("parametric", form=form, params=dict(params), lambda_bar=lambda_bar)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def form_def(self):
        return FORMS.get(self.form) if self.kind == "parametric" else None

    def __call__(self, locs, domain):
        locs = as_locations(locs)
        if self.kind == "homogeneous":
            return np.full(locs.shape[0], self.rate)
        if self.fn is not None:
            return np.asarray(self.fn(locs), dtype=float)
        return np.asarray(self.form_def.evaluate(locs, self.params, domain), dtype=float)

    def bound(self, domain):
        if self.kind == "homogeneous":
            return self.rate
        if self.lambda_bar is not None:
            return float(self.lambda_bar)
        if self.form_def is not None and self.form_def.bound is not None:
            return float(self.form_def.bound(self.params, domain))
        raise UnboundedIntensity("parametric intensity needs an upper bound lambda_bar")


def intensity_integral(intensity, domain, rtol=1e-6):
    """Lambda_S, in closed form when the form has one and by 2-D quadrature otherwise."""
    if intensity.kind == "homogeneous":
        return intensity.rate * domain.area
    form_def = intensity.form_def
    if form_def is not None and form_def.integral is not None:
        return float(form_def.integral(intensity.params, domain))

    def integrand(y, x):
        return float(intensity(np.array([[x, y]]), domain)[0])

    value, err = integrate.dblquad(
        integrand, domain.x_min, domain.x_max, domain.y_min, domain.y_max, epsabs=0.0, epsrel=1e-9
    )
    if not np.isfinite(value) or err > rtol * max(abs(value), 1e-300):
        raise QuadratureFailure(f"intensity integral {value} with error estimate {err}")
    return float(value)


def pp_sample(rng, intensity, domain):
    """One Poisson-process pattern on ``domain``; inhomogeneous kinds are thinned."""
    if intensity.kind == "homogeneous":
        n = rng.poisson(intensity.rate * domain.area)
        return domain.uniform(rng, n)
    bar = intensity.bound(domain)
    n = rng.poisson(bar * domain.area)
    cand = domain.uniform(rng, n)
    if n == 0:
        return cand
    lam = intensity(cand, domain)
    if np.any(lam > bar * (1 + 1e-12)):
        raise UnboundedIntensity("intensity exceeds its declared bound lambda_bar")
    keep = rng.random(n) * bar < lam
    return cand[keep]


def pp_sample_region(rng, intensity, domain, region):
    """Poisson-process events inside ``region`` (a sub-rectangle of ``domain``).

    Parametric intensities are still evaluated relative to ``domain``.
    """
    if intensity.kind == "homogeneous":
        return region.uniform(rng, rng.poisson(intensity.rate * region.area))
    bar = intensity.bound(domain)
    cand = region.uniform(rng, rng.poisson(bar * region.area))
    if cand.shape[0] == 0:
        return cand
    lam = intensity(cand, domain)
    if np.any(lam > bar * (1 + 1e-12)):
        raise UnboundedIntensity("intensity exceeds its declared bound lambda_bar")
    return cand[rng.random(cand.shape[0]) * bar < lam]


def pp_logdensity(events, intensity, domain, integral=None):
    """``-Lambda_S + sum log lambda(s_j)`` (density w.r.t. a unit-rate process, up to a constant)."""
    events = as_locations(events)
    lam_s = intensity_integral(intensity, domain) if integral is None else integral
    if events.shape[0] == 0:
        return -lam_s
    lam = intensity(events, domain)
    with np.errstate(divide="ignore"):
        return float(-lam_s + np.sum(np.log(lam)))
