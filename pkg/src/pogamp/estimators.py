"""Monte Carlo estimators and empirical harnesses for POGAMP properties."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import cho_solve, solve_triangular

from .distributions import LOG_2PI, fdist_logdensity_cached, fdist_sample, marginal_cdf, marginal_logpdf
from .errors import NotSymmetric
from .geometry import as_locations, match_rotation, rotate_locations
from .linalg import InverseCache, cholesky, logdet_from_cholesky
from .model import simulate_replicates
from .pointprocess import pp_sample


@dataclass(frozen=True)
class Estimate:
    value: np.ndarray | float
    se: np.ndarray | float


def _mean_se(samples):
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    return Estimate(samples.mean(axis=0), samples.std(axis=0, ddof=1) / math.sqrt(n))


def _draw_events_and_values(rng, model):
    events = pp_sample(rng, model.intensity, model.domain)
    if events.shape[0] == 0:
        return events, np.zeros(0), None
    chol = cholesky(model.kernel.matrix(events))
    y_n = fdist_sample(rng, model.f, events, chol=chol if model.shares_kernel else None)
    return events, y_n, chol


def fdd_density_mc(rng, model, s_r, y, mc_draws):
    """Rao-Blackwellized estimate of the POGAMP density of Y(s_r) at ``y``.

    Each draw of (N, Y_N) contributes the Gaussian conditional density of the
    base GP at ``s_r`` given Y_N; the series over |N| is handled by sampling N.
    ``y`` may be one vector of length r or a grid of shape (m, r).
    Returns an :class:`Estimate` with one entry per row of ``y``.
    """
    if mc_draws < 1000:
        raise ValueError("mc_draws must be at least 1000")
    s_r = as_locations(s_r)
    y = np.asarray(y, dtype=float)
    single = y.ndim <= 1 and not (s_r.shape[0] == 1 and y.ndim == 1 and y.size > 1)
    grid = y.reshape(-1, s_r.shape[0])
    kernel = model.kernel
    k_rr = kernel.matrix(s_r)
    r = s_r.shape[0]
    vals = np.empty((mc_draws, grid.shape[0]))
    for i in range(mc_draws):
        events, y_n, chol = _draw_events_and_values(rng, model)
        if chol is None:
            mean, cov = np.full(r, kernel.mean), k_rr
        else:
            w = solve_triangular(chol, kernel.cross(events, s_r), lower=True)
            z = solve_triangular(chol, y_n - kernel.mean, lower=True)
            mean, cov = kernel.mean + w.T @ z, k_rr - w.T @ w
        c = cholesky(0.5 * (cov + cov.T))
        u = solve_triangular(c, (grid - mean).T, lower=True)
        vals[i] = np.exp(-0.5 * (r * LOG_2PI + logdet_from_cholesky(c) + np.sum(u * u, axis=0)))
    est = _mean_se(vals)
    if single:
        return Estimate(float(est.value[0]), float(est.se[0]))
    return est


def kld_mc(rng, model, mc_draws):
    """Monte Carlo estimate of the KL divergence of the POGAMP from the augmented GP.

    Averages log(f/g)(Y_N) over draws of N and Y_N ~ f; empty patterns add 0.
    """
    if mc_draws < 1000:
        raise ValueError("mc_draws must be at least 1000")
    vals = np.zeros(mc_draws)
    for i in range(mc_draws):
        events, y_n, chol = _draw_events_and_values(rng, model)
        if chol is None:
            continue
        g_cache = InverseCache(events, cho_solve((chol, True), np.eye(events.shape[0])), logdet_from_cholesky(chol))
        f_cache = g_cache if model.shares_kernel else InverseCache.from_locations(events, model.f.kernel)
        r = y_n - model.kernel.mean
        vals[i] = fdist_logdensity_cached(model.f, y_n, f_cache) - (
            -0.5 * (len(r) * LOG_2PI + g_cache.logdet + r @ g_cache.inv @ r)
        )
    return _mean_se(vals)


def empirical_cov(rng, model, s1, s2, replicates):
    """Sample covariance of (Y(s1), Y(s2)) over independent POGAMP draws, with its standard error."""
    if replicates < 10_000:
        raise ValueError("replicates must be at least 10^4")
    s1 = as_locations(s1)[0]
    s2 = as_locations(s2)[0]
    same = np.array_equal(s1, s2)
    sites = s1[None, :] if same else np.vstack([s1, s2])
    _, values = simulate_replicates(rng, model, sites, replicates)
    a = values[:, 0] - values[:, 0].mean()
    b = a if same else values[:, 1] - values[:, 1].mean()
    prod = a * b
    n = replicates
    return Estimate(float(prod.sum() / (n - 1)), float(prod.std(ddof=1) / math.sqrt(n)))


@dataclass(frozen=True)
class SymmetryReport:
    angle: float
    statistics: np.ndarray  # per coordinate, then the sum
    pvalues: np.ndarray


def symmetry_check(rng, model, set_a, set_b, replicates):
    """Two-sample KS comparison of Y(set_a) and Y(set_b) under the model.

    ``set_b`` must be the image of ``set_a`` under a rotation preserving the
    domain; coordinates of ``set_b`` are compared with their preimages in
    ``set_a``. The last entry of the report compares the coordinate sums.
    """
    a = as_locations(set_a)
    b = as_locations(set_b)
    match = match_rotation(a, b, model.domain)
    if match is None:
        raise NotSymmetric("no domain-preserving rotation maps set_a onto set_b")
    angle, perm = match
    _, va = simulate_replicates(rng, model, a, replicates)
    if angle == 0.0 and np.array_equal(a, b):
        vb = va
    else:
        _, vb = simulate_replicates(rng, model, b, replicates)
        vb = vb[:, perm]
    stat, pval = [], []
    for x, y in zip(list(va.T) + [va.sum(axis=1)], list(vb.T) + [vb.sum(axis=1)]):
        res = stats.ks_2samp(x, y)
        stat.append(res.statistic)
        pval.append(res.pvalue)
    return SymmetryReport(float(angle), np.array(stat), np.array(pval))


def rotated_sets(locs, domain):
    """``locs`` together with its images under each domain-preserving rotation."""
    locs = as_locations(locs)
    return [locs] + [rotate_locations(locs, a, domain.center, domain) for a in domain.symmetry_angles()]


@dataclass(frozen=True)
class LadderReport:
    lambdas: np.ndarray
    ks_f: np.ndarray  # KS distance to the f marginal
    ks_gp: np.ndarray  # KS distance to the base-GP marginal
    spearman: float
    pvalue: float


def convergence_ladder(rng, model, lambdas, site, replicates):
    """KS distance of the one-site POGAMP marginal to the f marginal along a rate ladder.

    ``model`` is a template whose intensity is replaced by each homogeneous
    rate. The Spearman test is one-sided (negative association).
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size > 1 and not np.all(np.diff(lambdas) >= 0):
        raise ValueError("lambdas must be increasing")
    site = as_locations(site)[:1]
    gp = stats.norm(model.kernel.mean, math.sqrt(model.kernel.variance))
    ks_f, ks_gp = [], []
    for lam in lambdas:
        _, values = simulate_replicates(rng, model.with_rate(lam), site, replicates)
        x = values[:, 0]
        ks_f.append(stats.kstest(x, lambda t: marginal_cdf(model.f, t)).statistic)
        ks_gp.append(stats.kstest(x, gp.cdf).statistic)
    ks_f = np.array(ks_f)
    if lambdas.size > 2 and np.ptp(ks_f) > 0:
        # exact permutation null; the t approximation is meaningless for a handful of rates
        res = stats.permutation_test(
            (ks_f,), lambda y: stats.spearmanr(np.arange(lambdas.size), y).statistic,
            permutation_type="pairings", alternative="less", n_resamples=10_000, random_state=0,
        )
        rho, p = float(res.statistic), float(res.pvalue)
    else:
        rho, p = float("nan"), float("nan")
    return LadderReport(lambdas, ks_f, np.array(ks_gp), rho, p)


def marginal_density_table(rng, model, lambdas, site, replicates, grid):
    """Columns for a marginal-density figure at one site.

    Returns a dict with the grid, the f and base-GP marginal densities, and a
    kernel density estimate of the POGAMP marginal for each rate.
    """
    grid = np.asarray(grid, dtype=float)
    site = as_locations(site)[:1]
    sd = math.sqrt(model.kernel.variance)
    table = {
        "y": grid,
        "f_density": np.exp(marginal_logpdf(model.f, grid)),
        "gp_density": stats.norm.pdf(grid, model.kernel.mean, sd),
    }
    for lam in lambdas:
        _, values = simulate_replicates(rng, model.with_rate(lam), site, replicates)
        table[f"lambda_{lam:g}"] = stats.gaussian_kde(values[:, 0])(grid)
    return table


__all__ = [
    "Estimate",
    "LadderReport",
    "SymmetryReport",
    "convergence_ladder",
    "empirical_cov",
    "fdd_density_mc",
    "kld_mc",
    "marginal_density_table",
    "rotated_sets",
    "symmetry_check",
]
