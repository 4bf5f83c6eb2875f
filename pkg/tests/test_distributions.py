import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from pogamp.distributions import (
    FDist,
    fdist_cov,
    fdist_logdensity,
    fdist_mean,
    fdist_sample,
    gp_conditional,
    marginal_cdf,
    marginal_logpdf,
    marginal_sample,
    mvn_logdensity,
    mvn_sample,
)
from pogamp.errors import DegreesOfFreedomTooSmall, UnsupportedFamily
from pogamp.kernels import CovKernel
from pogamp.linalg import InverseCache

KERNEL = CovKernel("exponential", sigma2=1.5, phi=0.5, tau2=0.1, mean=0.3)
LOCS = np.array([[0.1, 0.2], [0.4, 0.3], [0.8, 0.9]])


def _sn_by_quadrature(y, f, locs):
    """Density of xi + omega*delta*|Z0|*1 + W by integrating over |Z0|."""
    k = f.kernel.matrix(locs)
    d = f.delta
    resid_cov = (1 - d * d) * k

    def integrand(z0):
        return 2 * stats.norm.pdf(z0) * stats.multivariate_normal.pdf(
            y, mean=f.location + f.omega * d * z0 * np.ones(len(y)), cov=resid_cov
        )

    return integrate.quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-11, limit=200)[0]


def _st_by_quadrature(y, f, locs):
    """Skew-t density as a Gamma(nu/2, nu/2) scale mixture of the skew-normal."""
    sn = f.replace(family="skew_normal", nu=None)
    n = len(y)

    def integrand(v):
        return stats.gamma.pdf(v, f.nu / 2, scale=2 / f.nu) * v ** (n / 2) * _sn_by_quadrature(
            f.location + math.sqrt(v) * (y - f.location), sn, locs
        )

    return integrate.quad(integrand, 0, np.inf, epsrel=1e-9, limit=200)[0]


def test_mvn_logdensity_matches_scipy(rng):
    cov = KERNEL.matrix(LOCS)
    y = rng.normal(size=3)
    expected = stats.multivariate_normal.logpdf(y, mean=np.full(3, 0.3), cov=cov)
    assert math.isclose(mvn_logdensity(y, 0.3, cov), expected, rel_tol=1e-12)
    rows = rng.normal(size=(4, 3))
    assert np.allclose(mvn_logdensity(rows, 0.3, cov), stats.multivariate_normal.logpdf(rows, np.full(3, 0.3), cov))


@pytest.mark.parametrize("alpha", [0.0, 1.5, -4.0])
def test_skew_normal_density_matches_quadrature(alpha, rng):
    f = FDist("skew_normal", KERNEL, alpha=alpha)
    y = 0.3 + rng.normal(size=3)
    assert math.isclose(math.exp(fdist_logdensity(f, LOCS, y)), _sn_by_quadrature(y, f, LOCS), rel_tol=1e-7)


@pytest.mark.parametrize("alpha,nu", [(0.0, 4.0), (2.0, 5.0), (-1.0, 3.0)])
def test_skew_t_density_matches_quadrature(alpha, nu, rng):
    f = FDist("skew_t", KERNEL, alpha=alpha, nu=nu)
    y = 0.3 + rng.normal(size=3)
    assert math.isclose(math.exp(fdist_logdensity(f, LOCS, y)), _st_by_quadrature(y, f, LOCS), rel_tol=1e-6)


def test_student_t_matches_scipy(rng):
    f = FDist("student_t", KERNEL, nu=6.0)
    y = rng.normal(size=3)
    expected = stats.multivariate_t.logpdf(y, loc=np.full(3, 0.3), shape=KERNEL.matrix(LOCS), df=6.0)
    assert math.isclose(fdist_logdensity(f, LOCS, y), expected, rel_tol=1e-10)


def test_gaussian_limit_is_the_gp(rng):
    f = FDist.gaussian_limit(KERNEL)
    y = rng.normal(size=3)
    assert math.isclose(fdist_logdensity(f, LOCS, y), mvn_logdensity(y, 0.3, KERNEL.matrix(LOCS)), rel_tol=1e-12)


def test_logdensity_rows_and_cache_agree(rng):
    f = FDist("skew_t", KERNEL, alpha=1.0, nu=5.0)
    rows = rng.normal(size=(5, 3))
    from pogamp.distributions import fdist_logdensity_cached

    batch = fdist_logdensity_cached(f, rows, InverseCache.from_locations(LOCS, KERNEL))
    single = [fdist_logdensity(f, LOCS, r) for r in rows]
    assert np.allclose(batch, single, rtol=1e-12)


@pytest.mark.parametrize("family,alpha,nu", [("skew_normal", 3.0, None), ("skew_t", 2.0, 7.0), ("student_t", 0.0, 5.0)])
def test_sample_moments_match_closed_form(family, alpha, nu, rng):
    f = FDist(family, KERNEL, alpha=alpha, nu=nu)
    x = fdist_sample(rng, f, LOCS, size=200_000)
    assert np.allclose(x.mean(axis=0), fdist_mean(f), atol=0.03)
    assert np.allclose(np.cov(x.T), fdist_cov(f, LOCS), atol=0.06 if family != "skew_normal" else 0.03)


@pytest.mark.parametrize("family,alpha,nu", [("skew_normal", 3.0, None), ("skew_t", -2.0, 4.0), ("student_t", 0.0, 3.5)])
def test_one_site_marginal_is_consistent(family, alpha, nu, rng):
    f = FDist(family, KERNEL, alpha=alpha, nu=nu)
    joint = fdist_sample(rng, f, LOCS, size=20_000)[:, 2]
    assert stats.kstest(joint, lambda t: marginal_cdf(f, t)).pvalue > 0.001
    one = marginal_sample(rng, f, 20_000)
    assert stats.kstest(one, lambda t: marginal_cdf(f, t)).pvalue > 0.001


def test_skew_t_marginal_cdf_matches_integrated_pdf():
    f = FDist("skew_t", KERNEL, alpha=2.0, nu=4.0)
    x = np.array([-1.0, 0.3, 2.0])
    expected = [integrate.quad(lambda t: math.exp(marginal_logpdf(f, t)), -np.inf, v)[0] for v in x]
    assert np.allclose(marginal_cdf(f, x), expected, atol=1e-8)


def test_gp_conditional_against_block_formula(rng):
    given = rng.random((4, 2))
    target = rng.random((2, 2))
    y = rng.normal(size=4)
    full = KERNEL.matrix(np.vstack([target, given]))
    s11, s12, s22 = full[:2, :2], full[:2, 2:], full[2:, 2:]
    mean = 0.3 + s12 @ np.linalg.solve(s22, y - 0.3)
    cov = s11 - s12 @ np.linalg.solve(s22, s12.T)
    for inv in (None, InverseCache.from_locations(given, KERNEL)):
        cond = gp_conditional(target, given, y, KERNEL, given_inv=inv)
        assert np.allclose(cond.mean, mean, atol=1e-10)
        assert np.allclose(cond.cov, cov, atol=1e-10)


def test_gp_conditional_without_data_is_prior():
    cond = gp_conditional(LOCS, np.zeros((0, 2)), np.zeros(0), KERNEL)
    assert np.allclose(cond.mean, 0.3) and np.allclose(cond.cov, KERNEL.matrix(LOCS))


def test_mvn_sample_handles_singular_covariance(rng):
    x = mvn_sample(rng, np.zeros(2), np.ones((2, 2)), size=10)
    assert np.allclose(x[:, 0], x[:, 1])


def test_family_validation():
    with pytest.raises(UnsupportedFamily):
        FDist("cauchy", KERNEL)
    with pytest.raises(DegreesOfFreedomTooSmall):
        FDist("skew_t", KERNEL, alpha=1.0, nu=2.0)
    with pytest.raises(ValueError):
        FDist("student_t", KERNEL, alpha=1.0, nu=5.0)


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(-5, 5), seed=st.integers(0, 1000))
def test_skew_normal_covariance_is_psd(alpha, seed):
    locs = np.random.default_rng(seed).random((6, 2))
    cov = fdist_cov(FDist("skew_normal", KERNEL, alpha=alpha), locs)
    assert np.linalg.eigvalsh(cov).min() > 0
