import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pogamp.errors import NotPositiveDefinite, NotSymmetric
from pogamp.kernels import CovKernel
from pogamp.linalg import (
    InverseCache,
    cholesky,
    inverse_add,
    inverse_remove,
    logdet_from_cholesky,
    spd_inverse,
)

KERNEL = CovKernel("exponential", sigma2=1.0, phi=0.3, tau2=0.01)


def test_cholesky_clean_matrix_has_no_jitter():
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    c = cholesky(a)
    assert np.allclose(c @ c.T, a, atol=1e-15)


def test_cholesky_jitter_ladder_rescues_singular():
    a = np.ones((3, 3))
    c = cholesky(a)
    assert np.allclose(c @ c.T, a, atol=1e-5)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.diag([1.0, -1.0]))


def test_cholesky_rejects_asymmetric():
    with pytest.raises((NotSymmetric, ValueError)):
        cholesky(np.array([[1.0, 0.3], [0.0, 1.0]]))


def test_spd_inverse_matches_numpy(rng):
    x = rng.normal(size=(6, 6))
    a = x @ x.T + 6 * np.eye(6)
    inv, logdet = spd_inverse(a)
    assert np.allclose(inv, np.linalg.inv(a), atol=1e-12)
    assert np.isclose(logdet, np.linalg.slogdet(a)[1])
    assert np.isclose(logdet_from_cholesky(np.linalg.cholesky(a)), logdet)


def _direct(locs):
    return np.linalg.inv(KERNEL.matrix(locs))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 20), k=st.integers(1, 6), seed=st.integers(0, 10_000))
def test_inverse_add_matches_direct(n, k, seed):
    rng = np.random.default_rng(seed)
    old, new = rng.random((n, 2)), rng.random((k, 2))
    cache = inverse_add(InverseCache.from_locations(old, KERNEL), new, KERNEL)
    locs = np.vstack([new, old])
    assert np.array_equal(cache.locations, locs)
    assert np.max(np.abs(cache.inv - _direct(locs))) < 1e-8
    assert np.isclose(cache.logdet, np.linalg.slogdet(KERNEL.matrix(locs))[1], atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 20), seed=st.integers(0, 10_000), data=st.data())
def test_inverse_remove_matches_direct(n, seed, data):
    rng = np.random.default_rng(seed)
    locs = rng.random((n, 2))
    drop = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n - 1, unique=True))
    cache = inverse_remove(InverseCache.from_locations(locs, KERNEL), drop)
    keep = np.setdiff1d(np.arange(n), drop)
    assert np.array_equal(cache.locations, locs[keep])
    assert np.max(np.abs(cache.inv - _direct(locs[keep]))) < 1e-8
    assert np.isclose(cache.logdet, np.linalg.slogdet(KERNEL.matrix(locs[keep]))[1], atol=1e-8)


def test_add_then_remove_round_trip(rng):
    locs = rng.random((15, 2))
    base = InverseCache.from_locations(locs, KERNEL)
    grown = inverse_add(base, rng.random((4, 2)), KERNEL)
    back = inverse_remove(grown, np.arange(4))
    assert np.array_equal(back.locations, locs)
    assert np.max(np.abs(back.inv - base.inv)) < 1e-7
    assert abs(back.logdet - base.logdet) < 1e-7


def test_remove_all_gives_empty(rng):
    cache = InverseCache.from_locations(rng.random((3, 2)), KERNEL)
    assert inverse_remove(cache, [0, 1, 2]).size == 0


def test_remove_nothing_and_add_nothing_are_identity(rng):
    cache = InverseCache.from_locations(rng.random((3, 2)), KERNEL)
    assert inverse_remove(cache, []) is cache
    assert inverse_add(cache, np.zeros((0, 2)), KERNEL) is cache


def test_remove_validates_indices(rng):
    cache = InverseCache.from_locations(rng.random((3, 2)), KERNEL)
    with pytest.raises(IndexError):
        inverse_remove(cache, [5])
    with pytest.raises(ValueError):
        inverse_remove(cache, [1, 1])


def test_add_to_empty_and_check(rng):
    cache = inverse_add(InverseCache.empty(), rng.random((5, 2)), KERNEL)
    assert cache.check(KERNEL)


def test_add_duplicate_site_without_nugget_falls_back():
    k = CovKernel("gaussian", sigma2=1.0, phi=0.5, tau2=0.0)
    locs = np.array([[0.1, 0.1], [0.5, 0.5]])
    cache = inverse_add(InverseCache.from_locations(locs, k), locs[:1] + 1e-9, k)
    assert cache.size == 3
    assert np.all(np.isfinite(cache.inv))
