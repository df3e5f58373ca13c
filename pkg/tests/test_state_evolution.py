"""Covariance recursion of the iterate limits and test-function quadrature."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from skglass import (
    BolthausenPreset,
    ModelParams,
    TanhSeq,
    ValidationError,
    ZeroSeq,
    big_q,
    delta_orbit,
    expect_test_function,
    solve_q,
    state_evolution,
)
from skglass.quadrature import expect_bivariate, expect_gaussian
from skglass.state_evolution import normalize_w0_law


class TestNormalizeW0Law:
    def test_scalar_becomes_single_atom(self):
        atoms = normalize_w0_law(0.3)
        assert atoms.shape == (1, 2)
        assert atoms[0, 0] == 0.3 and atoms[0, 1] == 1.0

    def test_atom_list_accepted(self):
        atoms = normalize_w0_law([(1.0, 0.5), (-1.0, 0.5)])
        assert atoms.shape == (2, 2)

    def test_bad_probabilities_rejected(self):
        with pytest.raises(ValidationError):
            normalize_w0_law([(1.0, 0.3), (-1.0, 0.3)])
        with pytest.raises(ValidationError):
            normalize_w0_law([])


class TestStructuralInvariants:
    def test_symmetric_and_psd(self):
        p = ModelParams(beta=1.0, h=0.5)
        q = solve_q(p).q
        for fs, w0 in [
            (TanhSeq(), 1.0),
            (BolthausenPreset(p, q), 0.0),
            (TanhSeq(), [(1.0, 0.5), (-1.0, 0.5)]),
        ]:
            table = state_evolution(fs, w0, 5)
            assert np.array_equal(table.sigma, table.sigma.T)
            evals = np.linalg.eigvalsh(table.sigma)
            assert evals.min() > -1e-10

    def test_zero_denoisers_give_zero_table(self):
        table = state_evolution(ZeroSeq(), 0.7, 4)
        assert np.array_equal(table.sigma, np.zeros((4, 4)))

    def test_depth_validation(self):
        with pytest.raises(ValidationError):
            state_evolution(TanhSeq(), 1.0, 0)

    def test_sigma_read_only(self):
        table = state_evolution(TanhSeq(), 1.0, 3)
        with pytest.raises(ValueError):
            table.sigma[0, 0] = 5.0


class TestClosedFormStructure:
    """With the constant-start preset the table collapses to scalar values:

    the first iterate is identically zero, every later variance equals q,
    the covariance of the second iterate with any later one is the orbit
    start, and each further diagonal offset applies the Delta map once.
    """

    def setup_method(self):
        self.p = ModelParams(beta=1.0, h=0.5)
        self.q = solve_q(self.p).q
        self.Q = big_q(self.p)
        self.orbit = delta_orbit(self.p, 8, tol=0.0)
        self.table = state_evolution(BolthausenPreset(self.p, self.q), 0.0, 6)

    def test_first_iterate_degenerate(self):
        assert_allclose(self.table.sigma[0, :], np.zeros(6), rtol=0, atol=1e-15)

    def test_diagonal_equals_q(self):
        # deviations compound one quadrature application per level
        for a in range(1, 6):
            assert_allclose(self.table.entry(a, a), self.q, rtol=0, atol=5e-12)

    def test_second_row_equals_orbit_start(self):
        for b in range(2, 6):
            assert_allclose(self.table.entry(1, b), self.Q, rtol=0, atol=1e-12)

    def test_off_diagonals_follow_orbit(self):
        for a in range(1, 6):
            for b in range(a + 1, 6):
                assert_allclose(
                    self.table.entry(a, b), self.orbit[a - 1], rtol=0, atol=5e-12
                )


class TestGenericEntries:
    def test_entries_recomputed_independently(self):
        fs = TanhSeq()
        table = state_evolution(fs, 1.0, 3)
        # variance of the first iterate: E tanh(W_0)^2 at the single atom
        assert_allclose(table.entry(0, 0), np.tanh(1.0) ** 2, rtol=0, atol=1e-14)
        # cross moment with the start splits by independence
        v1 = table.entry(0, 0)
        e_f1 = expect_gaussian(lambda z: np.tanh(np.sqrt(v1) * z))
        assert_allclose(table.entry(0, 1), np.tanh(1.0) * e_f1, rtol=0, atol=1e-13)
        # interior entry is the bivariate expectation over the previous block
        want = expect_bivariate(
            np.tanh, np.tanh, table.entry(0, 0), table.entry(1, 1), table.entry(0, 1)
        )
        assert_allclose(table.entry(1, 2), want, rtol=0, atol=1e-13)

    def test_symmetric_atoms_decouple_start(self):
        table = state_evolution(TanhSeq(), [(1.0, 0.5), (-1.0, 0.5)], 4)
        # E tanh(W_0) = 0, so the first row vanishes off the diagonal
        assert_allclose(table.sigma[0, 1:], np.zeros(3), rtol=0, atol=1e-14)
        assert_allclose(table.entry(0, 0), np.tanh(1.0) ** 2, rtol=0, atol=1e-14)


class TestExpectTestFunction:
    def setup_method(self):
        self.p = ModelParams(beta=1.0, h=0.5)
        self.q = solve_q(self.p).q
        self.table = state_evolution(BolthausenPreset(self.p, self.q), 0.0, 3)

    def test_quadratic_recovers_variance(self):
        got = expect_test_function(lambda ws: ws[0] ** 2, self.table)
        assert_allclose(got, self.table.entry(2, 2), rtol=0, atol=1e-10)

    def test_start_coordinate_uses_atoms(self):
        table = state_evolution(TanhSeq(), [(2.0, 0.25), (0.0, 0.75)], 2)
        got = expect_test_function(lambda ws: ws[-1], table)
        assert_allclose(got, 0.5, rtol=0, atol=1e-13)

    def test_single_level_matches_one_dimensional_rule(self):
        table = state_evolution(TanhSeq(), 1.0, 1)
        got = expect_test_function(lambda ws: np.tanh(ws[0]), table)
        var = table.entry(0, 0)
        want = expect_gaussian(lambda z: np.tanh(np.sqrt(var) * z))
        assert_allclose(got, want, rtol=0, atol=1e-10)

    def test_depth_cap(self):
        table = state_evolution(TanhSeq(), 1.0, 5)
        with pytest.raises(ValidationError):
            expect_test_function(lambda ws: ws[0], table)
