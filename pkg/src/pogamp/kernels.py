"""Stationary isotropic covariance kernels on the plane."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import as_locations

FAMILIES = ("exponential", "gaussian", "matern32")
KERNEL_PARAMS = ("mean", "sigma2", "phi", "tau2")


def correlation(family, d, phi):
    """Correlation rho(d) for the named family."""
    d = np.asarray(d, dtype=float)
    if family == "exponential":
        return np.exp(-d / phi)
    if family == "gaussian":
        return np.exp(-((d / phi) ** 2))
    if family == "matern32":
        r = np.sqrt(3.0) * d / phi
        return (1.0 + r) * np.exp(-r)
    raise ValueError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")


@dataclass(frozen=True)
class CovKernel:
    """sigma2 * rho(|s - s'| / phi) plus a nugget tau2 on coincident sites.

    ``mean`` is the constant mean of the process the kernel belongs to.
    """

    family: str = "exponential"
    sigma2: float = 1.0
    phi: float = 1.0
    tau2: float = 0.0
    mean: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if not self.phi > 0:
            raise ValueError("phi must be positive")
        if not self.tau2 >= 0:
            raise ValueError("tau2 must be non-negative")

    @property
    def variance(self):
        """Marginal variance sigma2 + tau2."""
        return self.sigma2 + self.tau2

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def params(self):
        return {name: getattr(self, name) for name in KERNEL_PARAMS}

    def from_distance(self, d):
        d = np.asarray(d, dtype=float)
        out = self.sigma2 * correlation(self.family, d, self.phi)
        if self.tau2:
            out = out + self.tau2 * (d == 0.0)
        return out

    def cross(self, a, b):
        return self.from_distance(cdist(as_locations(a), as_locations(b)))

    def matrix(self, locs):
        locs = as_locations(locs)
        k = self.from_distance(cdist(locs, locs))
        # cdist can leave tiny asymmetries; the diagonal is exact by construction
        return 0.5 * (k + k.T)


def kernel_eval(kernel, s1, s2):
    d = float(np.linalg.norm(np.asarray(s1, float) - np.asarray(s2, float)))
    return float(kernel.from_distance(d))


def cov_matrix(kernel, locs):
    return kernel.matrix(locs)
