"""Gaussian machinery and the f families (skew-normal, Student-t, skew-t).

The skew families share one construction. With ``K`` the scale kernel's
covariance at the sites, ``omega`` its marginal standard deviation and
``delta = alpha / sqrt(1 + alpha**2)``::

    Y = xi + omega * delta * |Z0| * 1 + W,     W ~ N(0, (1 - delta**2) K)

(divided by ``sqrt(V)``, ``V ~ Gamma(nu/2, rate=nu/2)``, for skew-t).
Every one-site marginal is then the univariate Azzalini skew-normal
(skew-t) with location ``xi``, scale ``omega`` and shape ``alpha``, whatever
the number of sites, and ``alpha = 0`` gives back ``N(xi, K)`` (Student-t).
The joint law is the Azzalini family with scale
``Omega = (1 - delta**2) K + omega**2 delta**2 11^T``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats
from scipy.linalg import cho_solve, solve_triangular

from .errors import DegreesOfFreedomTooSmall, UnsupportedFamily
from .geometry import as_locations
from .kernels import CovKernel
from .linalg import InverseCache, cholesky, logdet_from_cholesky

LOG_2PI = math.log(2.0 * math.pi)
F_FAMILIES = ("skew_normal", "student_t", "skew_t")
NU_MAX = 200.0


# ---------------------------------------------------------------------------
# multivariate normal


def mvn_logdensity(y, mean, cov):
    """Log density of N(mean, cov) at ``y`` (rows of a 2-D ``y`` are evaluated separately)."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    y = np.asarray(y, dtype=float)
    chol = cholesky(cov)
    r = y - mean
    z = solve_triangular(chol, np.atleast_2d(r).T, lower=True)
    out = -0.5 * (cov.shape[0] * LOG_2PI + logdet_from_cholesky(chol) + np.sum(z * z, axis=0))
    return float(out[0]) if y.ndim <= 1 else out


def mvn_logdensity_cached(r, cache):
    """Log density of a zero-mean normal residual ``r`` given an :class:`InverseCache`."""
    n = cache.size
    if n == 0:
        return 0.0
    return -0.5 * (n * LOG_2PI + cache.logdet + float(r @ cache.inv @ r))


def psd_factor(cov):
    """A matrix ``A`` with ``A A^T = cov`` that tolerates singular ``cov``."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(0.5 * (cov + cov.T))
        return v * np.sqrt(np.clip(w, 0.0, None))


def mvn_sample(rng, mean, cov, size=None):
    """Draw ``mean + L z``; ``size`` adds leading replicate dimensions."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (cov.shape[0],))
    factor = psd_factor(cov)
    shape = (cov.shape[0],) if size is None else (size, cov.shape[0])
    z = rng.standard_normal(shape)
    return mean + z @ factor.T


@dataclass
class GaussianConditional:
    mean: np.ndarray
    cov: np.ndarray

    def sample(self, rng, size=None):
        return mvn_sample(rng, self.mean, self.cov, size=size)

    def logpdf(self, y):
        return mvn_logdensity(y, self.mean, self.cov)


def gp_conditional(target, given, y_given, kernel, given_inv=None):
    """Law of the base GP at ``target`` given its values ``y_given`` at ``given``.

    ``given_inv`` may be an :class:`InverseCache` for ``given``; otherwise a
    Cholesky solve is used. With no given sites the unconditional law is
    returned.
    """
    target = as_locations(target)
    given = as_locations(given)
    mu = kernel.mean
    k_tt = kernel.matrix(target)
    if given.shape[0] == 0:
        return GaussianConditional(np.full(target.shape[0], mu), k_tt)
    k_tg = kernel.cross(target, given)
    resid = np.asarray(y_given, dtype=float) - mu
    if given_inv is not None:
        w = k_tg @ given_inv.inv
        mean = mu + w @ resid
        cov = k_tt - w @ k_tg.T
    else:
        chol = cholesky(kernel.matrix(given))
        a = cho_solve((chol, True), np.column_stack([resid, k_tg.T]))
        mean = mu + k_tg @ a[:, 0]
        cov = k_tt - k_tg @ a[:, 1:]
    return GaussianConditional(mean, 0.5 * (cov + cov.T))


# ---------------------------------------------------------------------------
# f families


@dataclass(frozen=True)
class FDist:
    """The multivariate family f: location and scale from ``kernel``, shape ``alpha``, dof ``nu``."""

    family: str
    kernel: CovKernel
    alpha: float = 0.0
    nu: float | None = None

    def __post_init__(self):
        if self.family not in F_FAMILIES:
            raise UnsupportedFamily(f"unknown f family {self.family!r}; expected one of {F_FAMILIES}")
        if self.heavy_tailed:
            if self.nu is None or not self.nu > 2:
                raise DegreesOfFreedomTooSmall(f"nu must exceed 2, got {self.nu}")
        if self.family == "student_t" and self.alpha:
            raise ValueError("student_t has no skewness parameter")

    @classmethod
    def gaussian_limit(cls, kernel):
        """The member of the family that coincides with the Gaussian of ``kernel``."""
        return cls("skew_normal", kernel, alpha=0.0)

    @property
    def heavy_tailed(self):
        return self.family in ("student_t", "skew_t")

    @property
    def skewed(self):
        return self.family in ("skew_normal", "skew_t")

    @property
    def location(self):
        return self.kernel.mean

    @property
    def omega(self):
        return math.sqrt(self.kernel.variance)

    @property
    def delta(self):
        a = self.alpha if self.skewed else 0.0
        return a / math.sqrt(1.0 + a * a)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def params(self):
        out = {}
        if self.skewed:
            out["alpha"] = self.alpha
        if self.heavy_tailed:
            out["nu"] = self.nu
        return out


def _t_shift_constant(nu):
    # sqrt(nu/pi) * Gamma((nu-1)/2) / Gamma(nu/2)
    return math.sqrt(nu / math.pi) * math.exp(special.gammaln(0.5 * (nu - 1)) - special.gammaln(0.5 * nu))


def fdist_logdensity_cached(f, y, cache):
    """Log f at values ``y`` (vector, or rows) using the inverse of the scale kernel at the sites."""
    n = cache.size
    y = np.asarray(y, dtype=float)
    if n == 0:
        return 0.0 if y.ndim <= 1 else np.zeros(y.shape[0])
    r = np.atleast_2d(y) - f.location  # m x n
    inv = cache.inv
    q0 = np.einsum("ij,jk,ik->i", r, inv, r)
    delta = f.delta
    if delta == 0.0:
        q, logdet, eta_r = q0, cache.logdet, None
    else:
        c = 1.0 - delta * delta
        inv1 = inv.sum(axis=1)
        s = f.omega**2 * delta**2 * inv1.sum() / c
        b_cr = f.omega * delta * (r @ inv1) / c
        q = q0 / c - b_cr**2 / (1.0 + s)
        logdet = n * math.log(c) + cache.logdet + math.log1p(s)
        eta_r = b_cr / math.sqrt(1.0 + s)
    if f.heavy_tailed:
        nu = f.nu
        out = (
            special.gammaln(0.5 * (nu + n))
            - special.gammaln(0.5 * nu)
            - 0.5 * n * math.log(nu * math.pi)
            - 0.5 * logdet
            - 0.5 * (nu + n) * np.log1p(q / nu)
        )
        if eta_r is not None:
            out = out + math.log(2.0) + stats.t.logcdf(eta_r * np.sqrt((nu + n) / (q + nu)), df=nu + n)
    else:
        out = -0.5 * (n * LOG_2PI + logdet + q)
        if eta_r is not None:
            out = out + math.log(2.0) + special.log_ndtr(eta_r)
    return float(out[0]) if y.ndim <= 1 else out


def fdist_logdensity(f, locs, y):
    """Log density of f at the sites ``locs`` evaluated at ``y``."""
    locs = as_locations(locs)
    return fdist_logdensity_cached(f, y, InverseCache.from_locations(locs, f.kernel))


def fdist_sample(rng, f, locs, size=None, chol=None):
    """Draw from f at ``locs`` through its stochastic representation.

    ``chol`` may supply a precomputed Cholesky factor of the scale kernel
    matrix at ``locs``.
    """
    locs = as_locations(locs)
    n = locs.shape[0]
    reps = 1 if size is None else size
    if n == 0:
        out = np.zeros((reps, 0))
        return out[0] if size is None else out
    if chol is None:
        chol = cholesky(f.kernel.matrix(locs))
    z = rng.standard_normal((reps, n)) @ chol.T
    delta = f.delta
    x = math.sqrt(1.0 - delta * delta) * z
    if f.skewed:
        z0 = np.abs(rng.standard_normal(reps))
        x = x + f.omega * delta * z0[:, None]
    if f.heavy_tailed:
        v = rng.gamma(0.5 * f.nu, 2.0 / f.nu, size=reps)
        x = x / np.sqrt(v)[:, None]
    x = x + f.location
    return x[0] if size is None else x


def fdist_cov(f, locs):
    """Closed-form covariance of f at ``locs``."""
    locs = as_locations(locs)
    if f.heavy_tailed and not f.nu > 2:
        raise DegreesOfFreedomTooSmall("covariance needs nu > 2")
    k = f.kernel.matrix(locs)
    delta, w2 = f.delta, f.omega**2
    ones = np.ones_like(k)
    if f.family == "student_t":
        return f.nu / (f.nu - 2.0) * k
    if f.family == "skew_normal":
        return (1.0 - delta**2) * k + w2 * delta**2 * (1.0 - 2.0 / math.pi) * ones
    nu = f.nu
    omega_mat = (1.0 - delta**2) * k + w2 * delta**2 * ones
    return nu / (nu - 2.0) * omega_mat - _t_shift_constant(nu) ** 2 * w2 * delta**2 * ones


def fdist_mean(f):
    """Marginal mean of f (identical at every site)."""
    if f.family == "student_t":
        return f.location
    if f.family == "skew_normal":
        return f.location + f.omega * f.delta * math.sqrt(2.0 / math.pi)
    return f.location + f.omega * f.delta * _t_shift_constant(f.nu)


# ---------------------------------------------------------------------------
# one-site marginals


def skew_t_logpdf(x, alpha, nu, loc=0.0, scale=1.0):
    """Univariate Azzalini skew-t log density."""
    z = (np.asarray(x, dtype=float) - loc) / scale
    return (
        math.log(2.0)
        - math.log(scale)
        + stats.t.logpdf(z, df=nu)
        + stats.t.logcdf(alpha * z * np.sqrt((nu + 1.0) / (nu + z * z)), df=nu + 1.0)
    )


def marginal_logpdf(f, x):
    x = np.asarray(x, dtype=float)
    if f.family == "skew_normal":
        return stats.skewnorm.logpdf(x, f.alpha, loc=f.location, scale=f.omega)
    if f.family == "student_t":
        return stats.t.logpdf(x, f.nu, loc=f.location, scale=f.omega)
    return skew_t_logpdf(x, f.alpha, f.nu, f.location, f.omega)


def _skew_t_cdf_standard(z, alpha, nu):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    order = np.argsort(z)
    zs = z[order]
    pdf = lambda t: np.exp(skew_t_logpdf(t, alpha, nu))  # noqa: E731
    # mass below the smallest point, then Gauss-Legendre panels between sorted points
    first = integrate.quad(pdf, -np.inf, zs[0], limit=200)[0]
    nodes, weights = np.polynomial.legendre.leggauss(16)
    lo, hi = zs[:-1], zs[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    panels = (pdf(pts) * weights[None, :]).sum(axis=1) * half
    cdf_sorted = first + np.concatenate([[0.0], np.cumsum(panels)])
    out = np.empty_like(cdf_sorted)
    out[order] = np.clip(cdf_sorted, 0.0, 1.0)
    return out


def marginal_cdf(f, x):
    """One-site marginal CDF of f. Skew-t is integrated numerically."""
    x = np.asarray(x, dtype=float)
    if f.family == "skew_normal":
        return stats.skewnorm.cdf(x, f.alpha, loc=f.location, scale=f.omega)
    if f.family == "student_t":
        return stats.t.cdf(x, f.nu, loc=f.location, scale=f.omega)
    out = _skew_t_cdf_standard((x.ravel() - f.location) / f.omega, f.alpha, f.nu)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def marginal_sample(rng, f, size):
    return fdist_sample(rng, f, np.zeros((1, 2)), size=size)[:, 0]
