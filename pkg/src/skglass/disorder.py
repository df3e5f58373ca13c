"""Seeded generation of the symmetric Gaussian coupling matrix.

Entry (i, j) with i < j is a standard normal draw computed from
(seed, i, j) alone: the pair's colexicographic rank feeds a SplitMix64
finalizer, the resulting 64-bit word becomes a uniform in (0, 1), and the
pinned inverse normal CDF turns it into the Gaussian value.  Nothing
depends on generation order, so identical (n, seed) gives bit-identical
matrices no matter how, or on how many workers, the entries are produced.
The diagonal is zero and the matrix is filled symmetrically.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ._normal import inverse_normal_cdf
from .errors import ValidationError

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
# distinct stream constant for replicate-seed derivation, so experiment
# seeds never collide with matrix-entry words of the same base seed
_GAMMA_SEEDS = np.uint64(0xD1B54A32D192ED03)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix64(x):
    """SplitMix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _uniform_open(words):
    """Map uint64 words to doubles strictly inside (0, 1)."""
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def pair_normal(seed, rank):
    """Standard normal draw for the pair of colex rank `rank` under `seed`."""
    seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    rank = np.asarray(rank, dtype=np.uint64)
    words = _mix64(seed + (rank + np.uint64(1)) * _GAMMA)
    return inverse_normal_cdf(_uniform_open(words))


def derive_seed(base_seed, index):
    """Deterministic 64-bit child seed for replicate `index` of `base_seed`."""
    mask = 0xFFFFFFFFFFFFFFFF
    state = (int(base_seed) + (int(index) + 1) * int(_GAMMA_SEEDS)) & mask
    # shape-(1,) array: uint64 wraparound is silent for arrays, warns for scalars
    return int(_mix64(np.array([state], dtype=np.uint64))[0])


@dataclass(frozen=True)
class DisorderMatrix:
    n: int
    entries: np.ndarray  # symmetric, zero diagonal
    seed: int

    def __post_init__(self):
        self.entries.setflags(write=False)


def sample_matrix(n, seed):
    """Sample the n x n symmetric coupling matrix for a 64-bit seed."""
    n = int(n)
    if n < 1:
        raise ValidationError("sample_matrix requires n >= 1")
    iu, ju = np.triu_indices(n, k=1)
    # colex rank of the pair (i, j), i < j: j*(j-1)/2 + i
    ranks = (ju.astype(np.uint64) * (ju.astype(np.uint64) - np.uint64(1))) // np.uint64(2)
    ranks = ranks + iu.astype(np.uint64)
    vals = pair_normal(seed, ranks) if n > 1 else np.empty(0)
    entries = np.zeros((n, n))
    entries[iu, ju] = vals
    entries[ju, iu] = vals
    return DisorderMatrix(n=n, entries=entries, seed=int(seed))


def restricted_row(A, i, S):
    """Row i of A with columns S and the diagonal removed.

    Returns (indices, values): the surviving column indices j not in
    S u {i} in ascending order, and the matching entries a_ij.
    """
    i = int(i)
    excluded = set(int(s) for s in S)
    if i in excluded:
        raise ValidationError("restricted_row requires i not in S")
    if not (0 <= i < A.n):
        raise ValidationError("restricted_row index i out of range")
    keep = np.array([j for j in range(A.n) if j != i and j not in excluded], dtype=np.intp)
    return keep, A.entries[i, keep]


_HEADER = struct.Struct("<qQ")  # n as int64, seed as uint64, little-endian


def save_matrix(A, path):
    """Binary dump: n, seed, then n*n row-major little-endian float64."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(A.n, A.seed & 0xFFFFFFFFFFFFFFFF))
        fh.write(A.entries.astype("<f8").tobytes(order="C"))


def load_matrix(path):
    """Read back a matrix written by save_matrix, checking its invariants."""
    with open(path, "rb") as fh:
        n, seed = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if n < 1 or data.size != n * n:
        raise ValidationError("matrix file is truncated or corrupt")
    entries = data.reshape(n, n).astype(np.float64)
    if np.any(np.diag(entries) != 0.0) or not np.array_equal(entries, entries.T):
        raise ValidationError("matrix file violates symmetry/zero-diagonal invariants")
    return DisorderMatrix(n=int(n), entries=entries, seed=int(seed))
