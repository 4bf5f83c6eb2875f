import math

import numpy as np
import pytest
from scipy import stats

from pogamp.errors import UnboundedIntensity
from pogamp.geometry import Domain
from pogamp.pointprocess import FORMS, Intensity, intensity_integral, pp_logdensity, pp_sample, pp_sample_region


def test_homogeneous_counts_are_poisson(rng):
    d = Domain(0, 2, 0, 3)
    counts = np.array([pp_sample(rng, Intensity.homogeneous(1.5), d).shape[0] for _ in range(4000)])
    assert abs(counts.mean() - 9.0) < 4 * math.sqrt(9.0 / 4000)
    assert abs(counts.var() - 9.0) < 0.6


def test_events_lie_inside(rng):
    d = Domain(-1, 1, 2, 3)
    ev = pp_sample(rng, Intensity.homogeneous(50), d)
    assert np.all(d.contains(ev))


def test_zero_rate_is_empty(rng):
    assert pp_sample(rng, Intensity.homogeneous(0.0), Domain()).shape == (0, 2)


def test_thinning_matches_linear_intensity(rng):
    d = Domain(0, 1, 0, 1)
    lam = Intensity.parametric("linear_x", a=10.0, b=40.0)
    xs = np.concatenate([pp_sample(rng, lam, d)[:, 0] for _ in range(600)])
    # x has density proportional to 10 + 40x on [0, 1]
    cdf = lambda t: (10 * t + 20 * t * t) / 30.0  # noqa: E731
    assert stats.kstest(xs, cdf).pvalue > 0.01
    assert abs(xs.size / 600 - intensity_integral(lam, d)) < 4 * math.sqrt(30 / 600)


@pytest.mark.parametrize("form,params", [
    ("linear_x", {"a": 1.0, "b": 2.0}),
    ("loglinear", {"b0": 0.2, "b1": -0.5, "b2": 0.3}),
    ("constant", {"c": 2.5}),
])
def test_closed_form_integral_matches_quadrature(form, params):
    d = Domain(0, 2, -1, 1)
    closed = intensity_integral(Intensity.parametric(form, **params), d)
    quad = intensity_integral(Intensity("parametric", form=form, params=params, fn=lambda s: FORMS[form].evaluate(s, params, d)), d)
    assert math.isclose(closed, quad, rel_tol=1e-7)


def test_bump_integral_by_quadrature():
    d = Domain.square(10)
    lam = Intensity.parametric("gaussian_bump", base=0.0, height=1.0, cx=5.0, cy=5.0, h=1.0)
    side = math.sqrt(2 * math.pi) * math.erf(5.0 / math.sqrt(2.0))
    assert math.isclose(intensity_integral(lam, d), side * side, rel_tol=1e-7)


def test_logdensity_homogeneous():
    d = Domain.square(2)
    ev = np.array([[0.1, 0.2], [1.0, 1.5]])
    assert math.isclose(pp_logdensity(ev, Intensity.homogeneous(3.0), d), -12.0 + 2 * math.log(3.0))
    assert pp_logdensity(np.zeros((0, 2)), Intensity.homogeneous(3.0), d) == -12.0


def test_unbounded_custom_intensity_raises(rng):
    lam = Intensity("parametric", fn=lambda s: np.ones(len(s)))
    with pytest.raises(UnboundedIntensity):
        pp_sample(rng, lam, Domain())


def test_declared_bound_too_small_raises(rng):
    lam = Intensity.parametric("constant", lambda_bar=1.0, c=5.0)
    with pytest.raises(UnboundedIntensity):
        pp_sample(rng, lam, Domain.square(5))


def test_region_sampler_uses_full_domain_coordinates(rng):
    d = Domain(0, 1, 0, 1)
    region = Domain(0.5, 1.0, 0.0, 1.0)
    lam = Intensity.parametric("linear_x", a=0.0, b=100.0)
    counts = [pp_sample_region(rng, lam, d, region).shape[0] for _ in range(2000)]
    # integral of 100x over x in [0.5, 1]: 37.5
    assert abs(np.mean(counts) - 37.5) < 4 * math.sqrt(37.5 / 2000)
