"""Counter-based coupling matrices: determinism, statistics, and replay."""

import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from skglass import ValidationError
from skglass.disorder import (
    derive_seed,
    load_matrix,
    pair_normal,
    restricted_row,
    sample_matrix,
    save_matrix,
)


class TestSampling:
    def test_deterministic(self):
        a = sample_matrix(40, 123)
        b = sample_matrix(40, 123)
        assert np.array_equal(a.entries, b.entries)
        assert a.seed == 123 and a.n == 40

    def test_symmetric_zero_diagonal(self):
        A = sample_matrix(31, 9)
        assert np.array_equal(A.entries, A.entries.T)
        assert np.all(np.diag(A.entries) == 0.0)

    def test_entries_read_only(self):
        A = sample_matrix(6, 0)
        with pytest.raises(ValueError):
            A.entries[0, 1] = 2.0

    def test_distinct_seeds_differ(self):
        a = sample_matrix(20, 1).entries
        b = sample_matrix(20, 2).entries
        assert np.max(np.abs(a - b)) > 0.1

    def test_counter_based_prefix_consistency(self):
        """Entry (i, j) depends only on (seed, i, j), not on the matrix size."""
        small = sample_matrix(6, 77).entries
        large = sample_matrix(13, 77).entries
        assert np.array_equal(large[:6, :6], small)

    def test_entry_matches_pair_stream(self):
        A = sample_matrix(9, 5)
        for i, j in [(0, 1), (2, 7), (5, 6), (0, 8)]:
            rank = np.array([j * (j - 1) // 2 + i], dtype=np.uint64)
            assert A.entries[i, j] == float(pair_normal(5, rank)[0])

    def test_size_validation(self):
        with pytest.raises(ValidationError):
            sample_matrix(0, 1)


class TestStatistics:
    def test_moments_at_n2000(self):
        A = sample_matrix(2000, 0)
        iu = np.triu_indices(2000, 1)
        e = A.entries[iu]
        m = e.size
        assert abs(e.mean()) < 4.0 / np.sqrt(m)
        assert abs(e.var(ddof=1) - 1.0) < 0.01

    def test_tail_mass_is_gaussian_like(self):
        e = sample_matrix(1200, 3).entries[np.triu_indices(1200, 1)]
        frac2 = np.mean(np.abs(e) > 2.0)
        assert abs(frac2 - 0.0455) < 0.005


class TestDeriveSeed:
    def test_frozen_value(self):
        assert derive_seed(42, 0) == 814261035509592648

    def test_no_collisions_in_replicate_range(self):
        seeds = {derive_seed(20260822, r) for r in range(1000)}
        assert len(seeds) == 1000

    def test_base_seed_separates_streams(self):
        a = [derive_seed(1, r) for r in range(50)]
        b = [derive_seed(2, r) for r in range(50)]
        assert not set(a) & set(b)

    def test_no_overflow_warnings(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            derive_seed(2**63 - 1, 999)
            derive_seed(0, 0)


class TestRestrictedRow:
    def test_excludes_subset_and_diagonal(self):
        A = sample_matrix(8, 4)
        idx, vals = restricted_row(A, 2, {1, 5})
        assert list(idx) == [0, 3, 4, 6, 7]
        assert_allclose(vals, A.entries[2, idx], rtol=0, atol=0)

    def test_self_in_subset_rejected(self):
        A = sample_matrix(5, 4)
        with pytest.raises(ValidationError):
            restricted_row(A, 2, {2})


class TestReplayFile:
    def test_round_trip(self, tmp_path):
        A = sample_matrix(17, 321)
        path = tmp_path / "coupling.bin"
        save_matrix(A, path)
        B = load_matrix(path)
        assert B.n == A.n and B.seed == A.seed
        assert np.array_equal(A.entries, B.entries)

    def test_truncated_file_rejected(self, tmp_path):
        A = sample_matrix(10, 1)
        path = tmp_path / "coupling.bin"
        save_matrix(A, path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-16])
        with pytest.raises(ValidationError):
            load_matrix(path)

    def test_corrupted_payload_rejected(self, tmp_path):
        A = sample_matrix(10, 1)
        path = tmp_path / "coupling.bin"
        save_matrix(A, path)
        raw = bytearray(path.read_bytes())
        # flip one payload float, breaking the symmetry invariant
        raw[40:48] = np.float64(99.0).tobytes()
        path.write_bytes(bytes(raw))
        with pytest.raises(ValidationError):
            load_matrix(path)
