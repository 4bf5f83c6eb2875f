"""Dense SPD linear algebra: jittered Cholesky and block inverse update/downdate.

Covariance "providers" passed to the cache operations only need two methods,
``matrix(locs)`` and ``cross(a, b)``; :class:`pogamp.kernels.CovKernel`
implements both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, lapack

from .errors import NotPositiveDefinite

# Relative jitter ladder (times mean diagonal) tried after a clean attempt fails.
JITTER_LADDER = (1e-10, 1e-8, 1e-6)


def _check_symmetric(a, rtol=1e-10):
    scale = max(np.max(np.abs(a)), 1e-300)
    if np.max(np.abs(a - a.T)) > rtol * scale:
        raise ValueError("matrix is not symmetric")


def cholesky(a, check=True):
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    A clean factorization is attempted first; on failure the diagonal is
    inflated by ``JITTER_LADDER`` multiples of its mean, up to
    ``1e-6 * trace / dim``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if check:
        _check_symmetric(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(a)))
    if not np.isfinite(scale) or scale <= 0:
        raise NotPositiveDefinite("non-positive mean diagonal")
    eye = np.eye(a.shape[0])
    for rel in JITTER_LADDER:
        try:
            return np.linalg.cholesky(a + rel * scale * eye)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefinite(
        f"matrix of dimension {a.shape[0]} is not positive definite "
        f"even with jitter {JITTER_LADDER[-1]:g}*mean(diag)"
    )


def logdet_from_cholesky(chol):
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def inverse_from_cholesky(chol):
    """Symmetric inverse ``(L L^T)^{-1}`` via LAPACK potri."""
    n = chol.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    inv, info = lapack.dpotri(chol, lower=1)
    if info != 0:
        raise NotPositiveDefinite(f"potri failed with info={info}")
    inv = np.tril(inv)
    return inv + np.tril(inv, -1).T


def spd_inverse(a):
    """Inverse and log-determinant of an SPD matrix."""
    chol = cholesky(a)
    return inverse_from_cholesky(chol), logdet_from_cholesky(chol)


def _as_locs(locs):
    locs = np.asarray(locs, dtype=float)
    if locs.size == 0:
        return np.zeros((0, 2))
    return locs.reshape(-1, 2)


@dataclass(frozen=True)
class InverseCache:
    """Inverse covariance of a location set, with its log-determinant."""

    locations: np.ndarray
    inv: np.ndarray
    logdet: float

    @property
    def size(self):
        return self.locations.shape[0]

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 2)), np.zeros((0, 0)), 0.0)

    @classmethod
    def from_locations(cls, locs, cov):
        locs = _as_locs(locs)
        if locs.shape[0] == 0:
            return cls.empty()
        inv, logdet = spd_inverse(cov.matrix(locs))
        return cls(locs, inv, logdet)

    def check(self, cov, atol=1e-8):
        """Return True when ``inv @ Sigma`` is the identity within ``atol``."""
        if self.size == 0:
            return True
        prod = self.inv @ cov.matrix(self.locations)
        return bool(np.max(np.abs(prod - np.eye(self.size))) <= atol)


def inverse_add(cache, new_locs, cov):
    """Inverse for ``new_locs`` prepended to ``cache.locations``.

    Uses the Schur complement of the existing block, so the cost is
    O(k^3 + k n^2) for k new sites. When the k x k complement is numerically
    singular the full matrix is re-inverted; if that also fails
    :class:`NotPositiveDefinite` propagates.
    """
    new_locs = _as_locs(new_locs)
    k = new_locs.shape[0]
    if k == 0:
        return cache
    n = cache.size
    if n == 0:
        return InverseCache.from_locations(new_locs, cov)

    a = cov.matrix(new_locs)
    b = cov.cross(new_locs, cache.locations)  # k x n
    bs = b @ cache.inv  # k x n
    schur = a - bs @ b.T
    schur = 0.5 * (schur + schur.T)
    try:
        schur_chol = np.linalg.cholesky(schur)
    except np.linalg.LinAlgError:
        return InverseCache.from_locations(np.vstack([new_locs, cache.locations]), cov)
    upsilon = inverse_from_cholesky(schur_chol)

    out = np.empty((n + k, n + k))
    off = -upsilon @ bs
    out[:k, :k] = upsilon
    out[:k, k:] = off
    out[k:, :k] = off.T
    out[k:, k:] = cache.inv + bs.T @ (upsilon @ bs)
    return InverseCache(
        np.vstack([new_locs, cache.locations]),
        out,
        cache.logdet + logdet_from_cholesky(schur_chol),
    )


def inverse_remove(cache, drop_indices):
    """Inverse for the locations left after dropping ``drop_indices``.

    The dropped rows/columns are treated as if moved to the trailing block
    ``D`` of the inverse; the reduced inverse is ``A - B D^{-1} C``. Remaining
    locations keep their relative order. Dropping every location yields the
    empty cache.
    """
    drop = np.unique(np.asarray(drop_indices, dtype=int).ravel())
    if drop.size == 0:
        return cache
    n = cache.size
    if drop.min() < 0 or drop.max() >= n:
        raise IndexError("drop index out of range")
    if drop.size != np.asarray(drop_indices).size:
        raise ValueError("drop indices must be distinct")
    if drop.size == n:
        return InverseCache.empty()
    keep = np.setdiff1d(np.arange(n), drop, assume_unique=True)

    inv = cache.inv
    a = inv[np.ix_(keep, keep)]
    b = inv[np.ix_(keep, drop)]
    d = inv[np.ix_(drop, drop)]
    d_chol = cholesky(d)
    dinv_c = cho_solve((d_chol, True), b.T)
    out = a - b @ dinv_c
    out = 0.5 * (out + out.T)
    return InverseCache(
        cache.locations[keep],
        out,
        cache.logdet + logdet_from_cholesky(d_chol),
    )


def quad_form(inv, r):
    return float(r @ inv @ r)
