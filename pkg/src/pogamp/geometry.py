"""Rectangular domains, their regular partitions, and rotations of site sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPartition, RotatedOutOfDomain


def as_locations(locs):
    """Coerce to a float array of shape (n, 2)."""
    arr = np.asarray(locs, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2))
    if arr.ndim == 1:
        if arr.shape[0] != 2:
            raise ValueError("a single site must have two coordinates")
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"locations must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("locations must be finite")
    return arr


@dataclass(frozen=True)
class Domain:
    x_min: float = 0.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"degenerate domain {self}")

    @classmethod
    def square(cls, side, origin=(0.0, 0.0)):
        x0, y0 = origin
        return cls(x0, x0 + side, y0, y0 + side)

    @property
    def width(self):
        return self.x_max - self.x_min

    @property
    def height(self):
        return self.y_max - self.y_min

    @property
    def area(self):
        return self.width * self.height

    @property
    def center(self):
        return np.array([0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max)])

    def contains(self, locs, tol=0.0):
        locs = as_locations(locs)
        return (
            (locs[:, 0] >= self.x_min - tol)
            & (locs[:, 0] <= self.x_max + tol)
            & (locs[:, 1] >= self.y_min - tol)
            & (locs[:, 1] <= self.y_max + tol)
        )

    def uniform(self, rng, n):
        u = rng.random((n, 2))
        return np.column_stack(
            [self.x_min + self.width * u[:, 0], self.y_min + self.height * u[:, 1]]
        )

    def symmetry_angles(self):
        """Rotations about the center (not multiples of 2*pi) that map the domain to itself."""
        if math.isclose(self.width, self.height, rel_tol=1e-12):
            return (0.5 * math.pi, math.pi, 1.5 * math.pi)
        return (math.pi,)


def partition_domain(domain, K, grid=None):
    """Split ``domain`` into K congruent axis-aligned cells, row-major from (x_min, y_min).

    Without ``grid`` K must be a perfect square; ``grid=(nx, ny)`` with
    ``nx * ny == K`` selects any other regular tiling.
    """
    if K < 1:
        raise InvalidPartition("K must be a positive integer")
    if grid is None:
        side = math.isqrt(K)
        if side * side != K:
            raise InvalidPartition(f"K={K} is not a perfect square; pass grid=(nx, ny)")
        nx = ny = side
    else:
        nx, ny = (int(g) for g in grid)
        if nx < 1 or ny < 1 or nx * ny != K:
            raise InvalidPartition(f"grid {grid} does not have {K} cells")
    xs = np.linspace(domain.x_min, domain.x_max, nx + 1)
    ys = np.linspace(domain.y_min, domain.y_max, ny + 1)
    xs[-1], ys[-1] = domain.x_max, domain.y_max
    cells = []
    for j in range(ny):
        for i in range(nx):
            cells.append(Domain(xs[i], xs[i + 1], ys[j], ys[j + 1]))
    return cells


def cell_index(cells, locs):
    """Index of the partition cell holding each site (boundaries go to the lower cell)."""
    locs = as_locations(locs)
    out = np.full(locs.shape[0], -1, dtype=int)
    for k, c in enumerate(cells):
        hit = (out < 0) & c.contains(locs)
        out[hit] = k
    return out


def rotate_locations(locs, angle, center=(0.0, 0.0), domain=None, tol=1e-9):
    """Rotate sites counter-clockwise by ``angle`` radians about ``center``.

    If ``domain`` is given, every rotated site must stay inside it.
    """
    locs = as_locations(locs)
    center = np.asarray(center, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    out = (locs - center) @ rot.T + center
    if domain is not None and not np.all(domain.contains(out, tol=tol)):
        raise RotatedOutOfDomain(f"rotation by {angle} moves sites outside {domain}")
    return out


def match_rotation(set_a, set_b, domain, tol=1e-9):
    """Find a domain-preserving rotation sending ``set_a`` onto ``set_b``.

    Returns ``(angle, perm)`` with ``rotate(set_a)[i] == set_b[perm[i]]``, or
    None when no such rotation exists. The identity is tried first.
    """
    a = as_locations(set_a)
    b = as_locations(set_b)
    if a.shape != b.shape:
        return None
    for angle in (0.0,) + tuple(domain.symmetry_angles()):
        ra = rotate_locations(a, angle, domain.center)
        d = np.linalg.norm(ra[:, None, :] - b[None, :, :], axis=-1)
        perm = np.argmin(d, axis=1)
        if np.all(d[np.arange(len(a)), perm] <= tol) and len(set(perm.tolist())) == len(a):
            return angle, perm
    return None
