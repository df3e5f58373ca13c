"""Inverse standard normal CDF: accuracy against an erfc-bisection oracle."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from skglass import ValidationError
from skglass._normal import inverse_normal_cdf


def _phi(x):
    # standard normal CDF through the complementary error function
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _bisect_quantile(p, lo=-13.0, hi=13.0):
    # the upper tail bisects through the lower one: erfc is accurate for
    # positive arguments, while 1 - erfc(x)/2 near p = 1 cancels digits
    if p > 0.5:
        return -_bisect_quantile(1.0 - p, lo, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _phi(mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


P_GRID = [
    1e-15,
    1e-12,
    1e-8,
    1e-4,
    0.0075,
    0.025,
    0.2,
    0.425,
    0.5,
    0.575,
    0.8,
    0.975,
    0.9925,
    1.0 - 1e-4,
    1.0 - 1e-8,
]


class TestAgainstBisection:
    @pytest.mark.parametrize("p", P_GRID)
    def test_quantile(self, p):
        got = float(inverse_normal_cdf(p))
        want = _bisect_quantile(p)
        assert abs(got - want) < 1e-12 * max(1.0, abs(want))

    def test_round_trip_through_cdf(self):
        for p in P_GRID:
            x = float(inverse_normal_cdf(p))
            assert_allclose(_phi(x), p, rtol=1e-11, atol=0)


class TestStructure:
    def test_median_is_zero(self):
        assert float(inverse_normal_cdf(0.5)) == 0.0

    def test_symmetry(self):
        # restricted to p where 1 - p keeps enough bits that the mirrored
        # input is the same quantile to ~1e-12
        for p in (1e-4, 0.01, 0.1, 0.3, 0.49):
            a = float(inverse_normal_cdf(p))
            b = float(inverse_normal_cdf(1.0 - p))
            assert_allclose(a, -b, rtol=0, atol=1e-12)

    def test_monotone(self):
        p = np.linspace(1e-6, 1.0 - 1e-6, 2001)
        x = inverse_normal_cdf(p)
        assert np.all(np.diff(x) > 0)

    def test_vectorized_matches_scalar(self):
        p = np.array([1e-9, 0.2, 0.5, 0.9, 1.0 - 1e-9])
        vec = inverse_normal_cdf(p)
        scl = np.array([float(inverse_normal_cdf(v)) for v in p])
        assert_allclose(vec, scl, rtol=0, atol=0)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.7, float("nan")])
    def test_domain_rejected(self, bad):
        with pytest.raises(ValidationError):
            inverse_normal_cdf(bad)


class TestScipyCrossCheck:
    def test_against_ndtri(self):
        special = pytest.importorskip("scipy.special")
        rng = np.random.default_rng(2026)
        p = np.concatenate(
            [
                rng.uniform(1e-6, 1.0 - 1e-6, 4000),
                [1e-15, 1e-12, 1e-9, 1.0 - 1e-9, 1.0 - 1e-12],
            ]
        )
        assert_allclose(inverse_normal_cdf(p), special.ndtri(p), rtol=1e-12, atol=1e-13)
