import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pogamp.errors import InvalidPartition, RotatedOutOfDomain
from pogamp.geometry import Domain, as_locations, cell_index, match_rotation, partition_domain, rotate_locations
from pogamp.kernels import CovKernel, correlation, cov_matrix, kernel_eval


def test_as_locations_shapes():
    assert as_locations([]).shape == (0, 2)
    assert as_locations([1.0, 2.0]).shape == (1, 2)
    with pytest.raises(ValueError):
        as_locations([[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        as_locations([[np.nan, 1.0]])


def test_partition_tiles_domain():
    d = Domain(0, 4, 0, 2)
    cells = partition_domain(d, 16)
    assert len(cells) == 16
    assert math.isclose(sum(c.area for c in cells), d.area)
    assert cells[0].x_min == 0 and cells[-1].x_max == 4 and cells[-1].y_max == 2


def test_partition_rejects_non_square_count():
    with pytest.raises(InvalidPartition):
        partition_domain(Domain(), 3)
    assert len(partition_domain(Domain(), 3, grid=(3, 1))) == 3
    with pytest.raises(InvalidPartition):
        partition_domain(Domain(), 0)


def test_cell_index_assigns_every_site(rng):
    d = Domain.square(2)
    cells = partition_domain(d, 9)
    locs = d.uniform(rng, 500)
    idx = cell_index(cells, locs)
    assert idx.min() >= 0
    for k in range(9):
        assert np.all(cells[k].contains(locs[idx == k]))


def test_rotation_quarter_turn():
    d = Domain.square(2)
    out = rotate_locations([[2.0, 1.0]], math.pi / 2, d.center, d)
    assert np.allclose(out, [[1.0, 2.0]])


def test_rotation_out_of_domain():
    d = Domain(0, 2, 0, 1)
    with pytest.raises(RotatedOutOfDomain):
        rotate_locations([[0.1, 0.1]], math.pi / 2, d.center, d)


def test_symmetry_angles():
    assert len(Domain.square(3).symmetry_angles()) == 3
    assert Domain(0, 2, 0, 1).symmetry_angles() == (math.pi,)


def test_match_rotation_finds_permutation(rng):
    d = Domain.square(1)
    a = d.uniform(rng, 4)
    b = rotate_locations(a, math.pi, d.center)[::-1]
    angle, perm = match_rotation(a, b, d)
    assert math.isclose(angle, math.pi)
    assert np.allclose(rotate_locations(a, angle, d.center), b[perm])
    assert match_rotation(a, a + 0.01, d) is None


@pytest.mark.parametrize("family,expected", [
    ("exponential", math.exp(-2.0)),
    ("gaussian", math.exp(-4.0)),
    ("matern32", (1 + 2 * math.sqrt(3)) * math.exp(-2 * math.sqrt(3))),
])
def test_correlation_values(family, expected):
    assert math.isclose(float(correlation(family, 1.0, 0.5)), expected, rel_tol=1e-12)


def test_kernel_nugget_only_on_diagonal():
    k = CovKernel(sigma2=2.0, phi=1.0, tau2=0.5)
    assert kernel_eval(k, [0, 0], [0, 0]) == 2.5
    assert math.isclose(kernel_eval(k, [0, 0], [1, 0]), 2 * math.exp(-1))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1000), family=st.sampled_from(["exponential", "gaussian", "matern32"]))
def test_cov_matrix_is_symmetric_psd(seed, family):
    locs = np.random.default_rng(seed).random((12, 2))
    m = cov_matrix(CovKernel(family, sigma2=1.0, phi=0.3, tau2=1e-6), locs)
    assert np.array_equal(m, m.T)
    assert np.linalg.eigvalsh(m).min() > -1e-10


def test_kernel_validation():
    with pytest.raises(ValueError):
        CovKernel(sigma2=0)
    with pytest.raises(ValueError):
        CovKernel(phi=-1)
    with pytest.raises(ValueError):
        CovKernel(family="cauchy")
