import numpy as np

from pogamp.diagnostics import autocorrelation, ess, mcse, split_rhat, summarize


def ar1(rng, phi, n, chains=1):
    x = np.empty((chains, n))
    x[:, 0] = rng.normal(size=chains) / np.sqrt(1 - phi * phi)
    for t in range(1, n):
        x[:, t] = phi * x[:, t - 1] + rng.normal(size=chains)
    return x


def test_autocorrelation_of_ar1(rng):
    x = ar1(rng, 0.7, 20000)[0]
    rho = autocorrelation(x)
    assert rho[0] == 1.0
    assert abs(rho[1] - 0.7) < 0.03 and abs(rho[2] - 0.49) < 0.04


def test_ess_of_ar1_near_theory(rng):
    phi = 0.8
    x = ar1(rng, phi, 5000, chains=4)
    theory = x.size * (1 - phi) / (1 + phi)
    assert 0.7 * theory < ess(x) < 1.3 * theory


def test_ess_of_iid_close_to_n(rng):
    assert 0.85 * 4000 < ess(rng.normal(size=4000)) < 1.15 * 4000


def test_rhat(rng):
    good = rng.normal(size=(4, 1000))
    assert abs(split_rhat(good) - 1.0) < 0.01
    bad = good + np.arange(4)[:, None]
    assert split_rhat(bad) > 1.5


def test_constant_and_short_series():
    assert np.isnan(ess(np.ones(100)))
    assert np.isnan(ess([1.0, 2.0]))
    assert np.isnan(split_rhat([1.0, 2.0]))


def test_mcse_and_summary(rng):
    x = rng.normal(size=(2, 2000))
    assert abs(mcse(x) - 1 / np.sqrt(4000)) < 0.005
    traces = [np.column_stack([np.arange(50), rng.normal(size=50)]) for _ in range(2)]
    out = summarize(["iteration", "a"], traces)
    assert list(out) == ["a"] and out["a"]["ess"] > 0
