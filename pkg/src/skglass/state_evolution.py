"""State evolution: the deterministic covariance recursion of the iterates.

The limiting description of the iteration vectors is a sequence
(W_0, W_1, ..., W_k) in which (W_k, ..., W_1) is jointly centered Gaussian,
independent of W_0, with

    E W_{a+1} W_{b+1} = E f_a(W_a) f_b(W_b),   0 <= a, b <= k-1.

W_0's law is a finite atom list (value, probability); the deterministic
starts used by the engines are single atoms.  sigma is built row by row:
entries touching W_1 split into E f_0(W_0) * E f_b(W_b) by independence,
and all other entries are bivariate Gaussian expectations with covariance
read from the already-filled rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .quadrature import default_rule, expect_bivariate, expect_gaussian

PSD_TOL = 1e-10


def normalize_w0_law(w0_law):
    """Accepts a constant or [(value, prob), ...]; returns the atom array."""
    if np.isscalar(w0_law):
        atoms = np.array([[float(w0_law), 1.0]])
    else:
        atoms = np.array([[float(v), float(p)] for v, p in w0_law])
    if atoms.size == 0:
        raise ValidationError("W_0 law needs at least one atom")
    if np.any(atoms[:, 1] < 0) or abs(atoms[:, 1].sum() - 1.0) > 1e-12:
        raise ValidationError("W_0 atom probabilities must be nonnegative and sum to 1")
    return atoms


@dataclass(frozen=True)
class CovarianceTable:
    k: int
    sigma: np.ndarray  # (k, k); entry (a, b) = E W_{a+1} W_{b+1}
    w0_law: np.ndarray  # atoms as rows (value, probability)

    def __post_init__(self):
        self.sigma.setflags(write=False)
        self.w0_law.setflags(write=False)

    def entry(self, a, b):
        return float(self.sigma[a, b])


def _atom_expectation(fs, k, atoms):
    return float(sum(p * float(np.asarray(fs.eval(k, np.float64(v)))) for v, p in atoms))


def state_evolution(fs, w0_law, k, rule=None):
    """CovarianceTable for depth k (sigma entries E W_{a+1}W_{b+1}, a,b < k)."""
    if k < 1:
        raise ValidationError("state_evolution requires depth k >= 1")
    rule = rule or default_rule()
    atoms = normalize_w0_law(w0_law)
    sigma = np.zeros((k, k))

    ef0 = _atom_expectation(fs, 0, atoms)
    ef0_sq = float(sum(p * float(np.asarray(fs.eval(0, np.float64(v)))) ** 2 for v, p in atoms))
    sigma[0, 0] = ef0_sq

    for a in range(1, k):
        # off-diagonal against W_1: independence of W_0 from the Gaussian block
        var_a = sigma[a - 1, a - 1]
        e_fa = expect_gaussian(lambda z, a=a: fs.eval(a, np.sqrt(max(var_a, 0.0)) * z), rule)
        sigma[a, 0] = sigma[0, a] = ef0 * e_fa
        for b in range(1, a + 1):
            val = expect_bivariate(
                lambda x, a=a: fs.eval(a, x),
                lambda y, b=b: fs.eval(b, y),
                sigma[a - 1, a - 1],
                sigma[b - 1, b - 1],
                sigma[a - 1, b - 1],
                rule,
            )
            sigma[a, b] = sigma[b, a] = val

    evals = np.linalg.eigvalsh(sigma)
    if evals.size and evals[0] < -PSD_TOL * max(1.0, float(evals[-1])):
        raise NumericalError(
            f"state evolution covariance lost positive semidefiniteness: min eigenvalue {evals[0]!r}"
        )
    return CovarianceTable(k=k, sigma=sigma, w0_law=atoms)


def gaussian_block_sqrt(table):
    """PSD square root of sigma, for sampling/integrating the Gaussian block."""
    evals, evecs = np.linalg.eigh(table.sigma)
    return evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None)))


def expect_test_function(psi, table, fs=None, nodes=24):
    """E psi(W_k, ..., W_1, W_0) by tensor quadrature over the Gaussian block.

    psi takes a list of arrays ordered (W_k, ..., W_1, W_0).  The Gaussian
    block dimension is table.k (capped at 4 to keep the tensor grid sane);
    W_0 integrates as the finite atom sum.
    """
    from .quadrature import gauss_hermite_rule

    k = table.k
    if k > 4:
        raise ValidationError("test-function quadrature supports block depth <= 4")
    rule = gauss_hermite_rule(nodes)
    L = gaussian_block_sqrt(table)

    grids = np.meshgrid(*([rule.nodes] * k), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=0)  # (k, nodes^k)
    weight = np.ones(z.shape[1])
    for g in np.meshgrid(*([rule.weights] * k), indexing="ij"):
        weight = weight * g.ravel()
    ws = L @ z  # rows: W_1 ... W_k

    total = 0.0
    for v0, p0 in table.w0_law:
        args = [ws[a] for a in range(k - 1, -1, -1)] + [np.full(z.shape[1], v0)]
        total += p0 * float(np.dot(weight, np.asarray(psi(args), dtype=np.float64)))
    return total
