"""Scalar fixed points: the overlap q, the AT condition, and the Delta map.

The independent oracle for q is a bisection on the defect
q - E tanh^2(beta z sqrt(q) + h), with the expectation computed by dense
trapezoid integration rather than the package's Gauss-Hermite rule.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from skglass import (
    ModelParams,
    NumericalError,
    ValidationError,
    big_q,
    delta_map,
    delta_orbit,
    gamma_map,
    rs_free_energy,
    solve_q,
)

_trapz = getattr(np, "trapezoid", np.trapz)
_Z = np.arange(-8.5, 8.5 + 0.005, 0.005)
_DENS = np.exp(-0.5 * _Z * _Z) / np.sqrt(2.0 * np.pi)


def _expect(g):
    return float(_trapz(g(_Z) * _DENS, _Z))


def _solve_q_bisection(beta, h, tol=1e-13):
    def defect(q):
        return q - _expect(lambda z: np.tanh(beta * np.sqrt(q) * z + h) ** 2)

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if defect(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


class TestModelParams:
    def test_negative_beta_rejected(self):
        with pytest.raises(ValidationError):
            ModelParams(beta=-0.1, h=0.5)

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            ModelParams(beta=1.0, h=float("nan"))


class TestSolveQ:
    def test_residual_on_grid(self):
        for beta in (0.2, 0.5, 1.0, 1.5):
            for h in (0.2, 0.5, 1.0):
                sol = solve_q(ModelParams(beta=beta, h=h))
                assert abs(sol.q_residual) < 1e-12
                assert 0.0 <= sol.q <= 1.0
                assert sol.iterations >= 1

    def test_beta_zero_closed_form(self):
        for h in (0.0, 0.3, 1.2):
            sol = solve_q(ModelParams(beta=0.0, h=h))
            assert_allclose(sol.q, np.tanh(h) ** 2, rtol=0, atol=1e-12)

    def test_matches_trapezoid_bisection(self):
        got = solve_q(ModelParams(beta=1.0, h=0.5)).q
        want = _solve_q_bisection(1.0, 0.5)
        assert_allclose(got, want, rtol=0, atol=1e-10)
        # frozen value from the same oracle
        assert_allclose(got, 0.302512964342, rtol=0, atol=1e-11)

    def test_monotone_in_field(self):
        for beta in (0.5, 1.0):
            qs = [solve_q(ModelParams(beta=beta, h=h)).q for h in np.arange(0.1, 2.01, 0.1)]
            assert np.all(np.diff(qs) > 0)

    def test_at_gap_values(self):
        inside = solve_q(ModelParams(beta=1.0, h=0.5))
        assert_allclose(inside.at_gap, 0.5534128767473829, rtol=1e-10, atol=0)
        assert inside.at_gap < 1.0
        outside = solve_q(ModelParams(beta=1.5, h=0.2))
        assert outside.at_gap > 1.0

    def test_at_gap_matches_trapezoid(self):
        p = ModelParams(beta=0.8, h=0.4)
        sol = solve_q(p)
        want = p.beta**2 * _expect(
            lambda z: np.cosh(p.beta * np.sqrt(sol.q) * z + p.h) ** -4.0
        )
        assert_allclose(sol.at_gap, want, rtol=0, atol=1e-10)


class TestFreeEnergy:
    def test_beta_zero(self):
        for h in (0.0, 0.7):
            got = rs_free_energy(ModelParams(beta=0.0, h=h))
            assert_allclose(got, np.log(2.0) + np.log(np.cosh(h)), rtol=0, atol=1e-13)

    def test_matches_trapezoid(self):
        p = ModelParams(beta=0.2, h=0.3)
        q = solve_q(p).q
        want = (
            np.log(2.0)
            + p.beta**2 / 4.0 * (1.0 - q) ** 2
            + _expect(lambda z: np.log(np.cosh(p.beta * np.sqrt(q) * z + p.h)))
        )
        assert_allclose(rs_free_energy(p), want, rtol=0, atol=1e-10)


class TestBigQ:
    def test_frozen_value(self):
        assert_allclose(big_q(ModelParams(beta=1.0, h=0.5)), 0.210601527091928, rtol=0, atol=1e-12)

    def test_matches_trapezoid(self):
        p = ModelParams(beta=1.0, h=0.5)
        q = solve_q(p).q
        want = np.sqrt(q) * _expect(lambda z: np.tanh(p.beta * np.sqrt(q) * z + p.h))
        assert_allclose(big_q(p), want, rtol=0, atol=1e-12)

    def test_beta_zero_equals_q(self):
        # sqrt(q) * tanh(h) = tanh(h)^2 = q in the decoupled limit
        p = ModelParams(beta=0.0, h=0.9)
        assert_allclose(big_q(p), solve_q(p).q, rtol=0, atol=1e-13)


class TestGammaMap:
    def test_full_correlation_reduces_to_q(self):
        p = ModelParams(beta=1.0, h=0.5)
        q = solve_q(p).q
        assert_allclose(gamma_map(1.0, q, q, p), q, rtol=0, atol=1e-12)

    def test_zero_correlation_factorizes(self):
        p = ModelParams(beta=1.0, h=0.5)
        q = solve_q(p).q
        want = big_q(p) ** 2 / q
        assert_allclose(gamma_map(0.0, q, q, p), want, rtol=0, atol=1e-12)

    def test_domain_validation(self):
        p = ModelParams(beta=1.0, h=0.5)
        with pytest.raises(ValidationError):
            gamma_map(1.5, 0.3, 0.3, p)
        with pytest.raises(ValidationError):
            gamma_map(0.5, -0.1, 0.3, p)


class TestDeltaMap:
    def setup_method(self):
        self.p = ModelParams(beta=1.0, h=0.5)
        self.q = solve_q(self.p).q

    def test_image_stays_inside_interval(self):
        for t in np.linspace(-self.q, self.q, 41):
            v = delta_map(t, self.p, q=self.q)
            assert -self.q <= v <= self.q

    def test_strictly_increasing(self):
        grid = np.linspace(-self.q, self.q, 41)
        vals = [delta_map(t, self.p, q=self.q) for t in grid]
        assert np.all(np.diff(vals) > 0)

    def test_interior_slope_below_one_inside_at_region(self):
        # finite differences on interior points; the AT gap bounds the slope
        grid = np.linspace(-0.9 * self.q, 0.9 * self.q, 25)
        step = 1e-6
        for t in grid:
            slope = (
                delta_map(t + step, self.p, q=self.q) - delta_map(t - step, self.p, q=self.q)
            ) / (2 * step)
            assert slope < 1.0

    def test_fixed_point_at_q(self):
        v, clamped = delta_map(self.q, self.p, q=self.q, with_flag=True)
        assert v == self.q

    def test_input_clamping_flag(self):
        v, clamped = delta_map(self.q + 0.2, self.p, q=self.q, with_flag=True)
        assert clamped
        assert v <= self.q


class TestDeltaOrbit:
    def test_starts_at_big_q(self):
        p = ModelParams(beta=1.0, h=0.5)
        orbit = delta_orbit(p, 5)
        assert_allclose(orbit[0], big_q(p), rtol=0, atol=0)

    def test_full_length_without_tol(self):
        orbit = delta_orbit(ModelParams(beta=1.0, h=0.5), 7, tol=0.0)
        assert len(orbit) == 8

    def test_strictly_increasing_when_early_stopped(self):
        orbit = delta_orbit(ModelParams(beta=1.0, h=0.5), 200, tol=1e-15)
        diffs = np.diff(orbit)
        assert np.all(diffs > 0)

    def test_converges_to_q(self):
        p = ModelParams(beta=1.0, h=0.5)
        orbit = delta_orbit(p, 200, tol=0.0)
        assert abs(orbit[-1] - solve_q(p).q) < 1e-6

    def test_beta_zero_orbit_is_constant(self):
        p = ModelParams(beta=0.0, h=0.6)
        orbit = delta_orbit(p, 10, tol=0.0)
        assert_allclose(orbit, np.full(11, solve_q(p).q), rtol=0, atol=1e-13)

    def test_depth_validation(self):
        with pytest.raises(ValidationError):
            delta_orbit(ModelParams(beta=1.0, h=0.5), 0)
