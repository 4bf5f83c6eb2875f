"""Nearest-neighbour GP on a regular reference mesh, conditional on Y_N.

The parent process is the base GP given its values at the events S_N. Its
conditional covariance is ``c(a, b) = k(a, b) - W_a^T W_b`` with
``W = L_N^{-1} k(S_N, .)``, so every NNGP factor conditions on S_N exactly and
on at most m mesh neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import cho_solve, solve_triangular
from scipy.sparse.linalg import spsolve_triangular
from scipy.spatial import cKDTree

from .distributions import LOG_2PI
from .geometry import as_locations
from .linalg import cholesky

DEFAULT_M = 15
DEFAULT_RESOLUTION = 20
VAR_FLOOR = 1e-10  # relative floor on conditional variances used as densities


@dataclass(frozen=True)
class NngpIndex:
    """Row-major mesh and, per mesh site, its m nearest predecessors (closest first)."""

    mesh: np.ndarray
    m: int
    neighbors: tuple
    resolution: int

    @property
    def size(self):
        return self.mesh.shape[0]

    def mesh_neighbors(self, targets):
        """The m nearest mesh sites of each target, closest first."""
        targets = as_locations(targets)
        k = min(self.m, self.size)
        _, idx = cKDTree(self.mesh).query(targets, k=k)
        return np.asarray(idx, dtype=int).reshape(targets.shape[0], k)


def build_index(domain, resolution=DEFAULT_RESOLUTION, m=DEFAULT_M):
    """Cell-centre mesh with ``resolution`` sites per axis and predecessor neighbour sets."""
    if resolution < 2:
        raise ValueError("mesh resolution must be at least 2")
    if m < 1:
        raise ValueError("m must be at least 1")
    xs = domain.x_min + (np.arange(resolution) + 0.5) * domain.width / resolution
    ys = domain.y_min + (np.arange(resolution) + 0.5) * domain.height / resolution
    gx, gy = np.meshgrid(xs, ys)
    mesh = np.column_stack([gx.ravel(), gy.ravel()])
    neighbors = [np.zeros(0, dtype=int)]
    for i in range(1, mesh.shape[0]):
        d = np.linalg.norm(mesh[:i] - mesh[i], axis=1)
        order = np.argsort(d, kind="stable")[:m]
        neighbors.append(order.astype(int))
    return NngpIndex(mesh, int(m), tuple(neighbors), int(resolution))


class ParentProcess:
    """The base GP conditioned on Y at ``n_locs`` (an unconditional GP when empty)."""

    def __init__(self, kernel, n_locs, y_n):
        self.kernel = kernel
        self.n_locs = as_locations(n_locs)
        self.y_n = np.asarray(y_n, dtype=float)
        if self.n_locs.shape[0]:
            self.chol = cholesky(kernel.matrix(self.n_locs))
            self.z = solve_triangular(self.chol, self.y_n - kernel.mean, lower=True)
        else:
            self.chol = None

    def weights(self, locs):
        """W = L_N^{-1} k(S_N, locs)."""
        if self.chol is None:
            return np.zeros((0, locs.shape[0]))
        return solve_triangular(self.chol, self.kernel.cross(self.n_locs, locs), lower=True)

    def mean(self, w):
        if self.chol is None:
            return np.full(w.shape[1], self.kernel.mean)
        return self.kernel.mean + w.T @ self.z

    def with_values(self, y_n):
        """Same locations, new values (reuses the factorisation)."""
        out = object.__new__(ParentProcess)
        out.kernel, out.n_locs, out.chol = self.kernel, self.n_locs, self.chol
        out.y_n = np.asarray(y_n, dtype=float)
        if self.chol is not None:
            out.z = solve_triangular(self.chol, out.y_n - self.kernel.mean, lower=True)
        return out


def _conditionals(kernel, parent, locs, w, nbr_locs, nbr_w):
    """Regression weights and variances of each site given its neighbours under the parent.

    ``nbr_locs`` is (B, j, 2) and ``nbr_w`` is (|N|, B, j); j may be 0.
    """
    b, j = nbr_locs.shape[:2]
    var = kernel.variance - np.sum(w * w, axis=0)
    if j == 0:
        return np.zeros((b, 0)), np.clip(var, 0.0, None)
    diff = nbr_locs[:, :, None, :] - nbr_locs[:, None, :, :]
    c_jj = kernel.from_distance(np.sqrt(np.sum(diff * diff, axis=-1)))
    c_ij = kernel.from_distance(np.linalg.norm(nbr_locs - locs[:, None, :], axis=-1))
    if w.shape[0]:
        c_jj = c_jj - np.einsum("nbj,nbk->bjk", nbr_w, nbr_w)
        c_ij = c_ij - np.einsum("nb,nbj->bj", w, nbr_w)
    coef = np.linalg.solve(0.5 * (c_jj + np.swapaxes(c_jj, 1, 2)), c_ij[:, :, None])[:, :, 0]
    var = var - np.sum(coef * c_ij, axis=1)
    return coef, np.clip(var, 0.0, None)


@dataclass
class MeshFactors:
    """Sparse NNGP representation of the mesh given S_N: (I - A)(y - mean) ~ N(0, diag(d))."""

    a: sparse.csr_matrix
    d: np.ndarray
    w: np.ndarray  # W at the mesh sites

    def precision(self):
        ia = sparse.identity(self.d.size, format="csr") - self.a
        return (ia.T @ sparse.diags(1.0 / self.d) @ ia).toarray()


def mesh_factors(index, parent):
    mesh = index.mesh
    size = index.size
    w = parent.weights(mesh)
    rows, cols, vals = [], [], []
    d = np.empty(size)
    counts = np.array([len(n) for n in index.neighbors])
    for j in np.unique(counts):
        sites = np.flatnonzero(counts == j)
        nbr = np.array([index.neighbors[i] for i in sites], dtype=int).reshape(sites.size, j)
        coef, var = _conditionals(parent.kernel, parent, mesh[sites], w[:, sites], mesh[nbr], w[:, nbr])
        d[sites] = var
        rows.append(np.repeat(sites, j))
        cols.append(nbr.ravel())
        vals.append(coef.ravel())
    a = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )
    return MeshFactors(a, np.maximum(d, VAR_FLOOR * parent.kernel.variance), w)


def nngp_logdensity(y_mesh, index, y_n, n_locs, kernel, factors=None):
    """NNGP log density of the mesh values given Y_N at ``n_locs``."""
    parent = ParentProcess(kernel, n_locs, y_n)
    factors = mesh_factors(index, parent) if factors is None else factors
    return mesh_logdensity(y_mesh, parent, factors)


def mesh_logdensity(y_mesh, parent, factors):
    """As :func:`nngp_logdensity` with the parent process and factors supplied."""
    r = np.asarray(y_mesh, dtype=float) - parent.mean(factors.w)
    e = r - factors.a @ r
    return float(-0.5 * np.sum(LOG_2PI + np.log(factors.d) + e * e / factors.d))


def nngp_mesh_sample(rng, index, y_n, n_locs, kernel, factors=None):
    """Sequential draw of the mesh from its NNGP law given Y_N."""
    parent = ParentProcess(kernel, n_locs, y_n)
    factors = mesh_factors(index, parent) if factors is None else factors
    e = rng.standard_normal(index.size) * np.sqrt(factors.d)
    ia = (sparse.identity(index.size, format="csr") - factors.a).tocsr()
    return parent.mean(factors.w) + spsolve_triangular(ia, e, lower=True)


@dataclass
class OffMeshFactors:
    """Each target given its mesh neighbours: y_t = mean_t + coef (y_J - mean_J) + sqrt(var) z."""

    nbr: np.ndarray
    coef: np.ndarray
    var: np.ndarray
    w: np.ndarray  # W at the targets
    nbr_w: np.ndarray  # W at the neighbour sites, (|N|, B, m)


def off_mesh_factors(index, parent, targets):
    targets = as_locations(targets)
    nbr = index.mesh_neighbors(targets)
    w = parent.weights(targets)
    uniq, inv = np.unique(nbr.ravel(), return_inverse=True)
    nbr_w = parent.weights(index.mesh[uniq])[:, inv].reshape(-1, *nbr.shape)
    coef, var = _conditionals(parent.kernel, parent, targets, w, index.mesh[nbr], nbr_w)
    return OffMeshFactors(nbr, coef, var, w, nbr_w)


def _off_mesh_mean(parent, fac, y_mesh):
    return parent.mean(fac.w) + np.sum(fac.coef * (np.asarray(y_mesh)[fac.nbr] - _nbr_mean(parent, fac)), axis=1)


def _nbr_mean(parent, fac):
    if parent.chol is None:
        return np.full(fac.nbr.shape, parent.kernel.mean)
    return parent.kernel.mean + np.einsum("nbj,n->bj", fac.nbr_w, parent.z)


def nngp_sample(rng, targets, index, y_n, n_locs, kernel, y_mesh):
    """Independent draws at off-mesh ``targets`` given their m mesh neighbours and Y_N."""
    parent = ParentProcess(kernel, n_locs, y_n)
    fac = off_mesh_factors(index, parent, targets)
    mean = _off_mesh_mean(parent, fac, y_mesh)
    return mean + np.sqrt(fac.var) * rng.standard_normal(mean.size)


def nngp_conditional_sample(rng, index, parent, fac, y_mesh):
    """Draw matching :func:`nngp_conditional_logdensity` (same variance floor)."""
    mean = _off_mesh_mean(parent, fac, y_mesh)
    var = np.maximum(fac.var, VAR_FLOOR * parent.kernel.variance)
    return mean + np.sqrt(var) * rng.standard_normal(mean.size)


def nngp_conditional_logdensity(y, targets, index, parent, y_mesh, fac=None):
    """Sum of the 1-D NNGP log densities of ``y`` at ``targets``."""
    fac = off_mesh_factors(index, parent, targets) if fac is None else fac
    mean = _off_mesh_mean(parent, fac, y_mesh)
    var = np.maximum(fac.var, VAR_FLOOR * parent.kernel.variance)
    r = np.asarray(y, dtype=float) - mean
    return float(-0.5 * np.sum(LOG_2PI + np.log(var) + r * r / var))


def observation_design(index, parent, obs_locs, fac=None):
    """Linear form of Y_o given the mesh: y_o = offset + H y_mesh + noise with variances ``var``."""
    fac = off_mesh_factors(index, parent, obs_locs) if fac is None else fac
    n = fac.nbr.shape[0]
    h = sparse.csr_matrix(
        (fac.coef.ravel(), (np.repeat(np.arange(n), fac.nbr.shape[1]), fac.nbr.ravel())),
        shape=(n, index.size),
    )
    offset = parent.mean(fac.w) - np.sum(fac.coef * _nbr_mean(parent, fac), axis=1)
    return h, offset, np.maximum(fac.var, VAR_FLOOR * parent.kernel.variance)


def mesh_posterior(index, parent, factors, obs_locs, y_o, obs_fac=None):
    """Gaussian law of the mesh given (Y_o, Y_N): returns (mean, Cholesky of precision)."""
    h, offset, var = observation_design(index, parent, obs_locs, fac=obs_fac)
    mean_prior = parent.mean(factors.w)
    prec = factors.precision() + (h.T @ sparse.diags(1.0 / var) @ h).toarray()
    chol = cholesky(0.5 * (prec + prec.T))
    resid = np.asarray(y_o, dtype=float) - offset - h @ mean_prior
    shift = cho_solve((chol, True), h.T @ (resid / var))
    return mean_prior + shift, chol


def mesh_gibbs(rng, index, parent, factors, obs_locs, y_o, obs_fac=None):
    """Exact draw of the mesh from its full conditional given (Y_o, Y_N)."""
    mean, chol = mesh_posterior(index, parent, factors, obs_locs, y_o, obs_fac)
    z = rng.standard_normal(mean.size)
    return mean + solve_triangular(chol.T, z, lower=False)


def nngp_predictive_mean(index, kernel, n_locs, y_n, obs_locs, y_o, targets):
    """E[Y(targets) | Y_o, Y_N] under the NNGP model with the mesh integrated out."""
    parent = ParentProcess(kernel, n_locs, y_n)
    factors = mesh_factors(index, parent)
    mesh_mean, _ = mesh_posterior(index, parent, factors, obs_locs, y_o)
    fac = off_mesh_factors(index, parent, targets)
    return _off_mesh_mean(parent, fac, mesh_mean)


def exact_joint_logdensity(y_mesh, index, y_n, n_locs, kernel):
    """Log density of the mesh under the parent GP itself (for saturation checks)."""
    parent = ParentProcess(kernel, n_locs, y_n)
    w = parent.weights(index.mesh)
    cov = kernel.matrix(index.mesh) - w.T @ w
    chol = cholesky(0.5 * (cov + cov.T))
    u = solve_triangular(chol, np.asarray(y_mesh) - parent.mean(w), lower=True)
    return float(-0.5 * (index.size * LOG_2PI + 2 * np.sum(np.log(np.diag(chol))) + u @ u))


__all__ = [
    "DEFAULT_M",
    "DEFAULT_RESOLUTION",
    "MeshFactors",
    "NngpIndex",
    "ParentProcess",
    "build_index",
    "exact_joint_logdensity",
    "mesh_factors",
    "mesh_gibbs",
    "mesh_logdensity",
    "mesh_posterior",
    "nngp_conditional_logdensity",
    "nngp_conditional_sample",
    "nngp_logdensity",
    "nngp_mesh_sample",
    "nngp_predictive_mean",
    "nngp_sample",
    "observation_design",
    "off_mesh_factors",
]
