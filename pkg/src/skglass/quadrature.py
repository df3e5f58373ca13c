"""Gaussian expectation rules.

Everything scalar in this package is an expectation against the standard
normal density, so the workhorse is a Gauss-Hermite rule in probabilist
normalization: nodes/weights from numpy's hermite_e family, weights
rescaled to sum to 1.  An m-node rule integrates polynomials up to degree
2m-1 exactly; the integrands here are tanh compositions, which such rules
resolve to machine precision long before the default m = 64.

Bivariate expectations E[g1(X) g2(Y)] over a centered Gaussian pair are
computed by a square-root factorization of the 2x2 covariance and a
tensorized two-dimensional rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DEFAULT_NODES = 64


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


def gauss_hermite_rule(m=DEFAULT_NODES):
    """Probabilist Gauss-Hermite rule with m nodes; weights sum to 1."""
    if m < 1:
        raise ValidationError("quadrature rule needs at least one node")
    nodes, weights = np.polynomial.hermite_e.hermegauss(int(m))
    weights = weights / np.sqrt(2.0 * np.pi)
    return Quadrature(nodes=nodes, weights=weights)


_DEFAULT_RULE = None


def default_rule():
    global _DEFAULT_RULE
    if _DEFAULT_RULE is None:
        _DEFAULT_RULE = gauss_hermite_rule(DEFAULT_NODES)
    return _DEFAULT_RULE


def expect_gaussian(g, rule=None):
    """E g(z) for z ~ N(0,1), as the weighted node sum of the rule."""
    rule = rule or default_rule()
    vals = np.asarray(g(rule.nodes), dtype=np.float64)
    if vals.shape != rule.nodes.shape:
        vals = np.broadcast_to(vals, rule.nodes.shape)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        node = rule.nodes[np.argmax(bad)]
        raise ValidationError(f"integrand is non-finite at quadrature node z={node!r}")
    return float(np.dot(rule.weights, vals))


def covariance_sqrt(var1, var2, cov, tol=1e-12):
    """Lower-triangular-ish square root L of [[var1,cov],[cov,var2]], PSD-checked.

    Uses the symmetric eigendecomposition rather than Cholesky so that
    exactly singular covariances (deterministic coordinates) pass through.
    Eigenvalues below -tol raise; small negatives inside the tolerance are
    clamped to zero.
    """
    var1, var2, cov = float(var1), float(var2), float(cov)
    if var1 < -tol or var2 < -tol:
        raise ValidationError("variances must be nonnegative")
    sigma = np.array([[max(var1, 0.0), cov], [cov, max(var2, 0.0)]])
    evals, evecs = np.linalg.eigh(sigma)
    if evals[0] < -tol * max(1.0, evals[-1], 1e-300):
        raise ValidationError(
            f"covariance [[{var1},{cov}],[{cov},{var2}]] is not positive semidefinite"
        )
    return evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None)))


def expect_bivariate(g1, g2, var1, var2, cov, rule=None):
    """E[g1(X) g2(Y)] for centered jointly Gaussian (X, Y).

    (X, Y) = L (z1, z2) with LL^T the covariance; the expectation is the
    tensor product of the one-dimensional rule with itself.
    """
    rule = rule or default_rule()
    L = covariance_sqrt(var1, var2, cov)
    z1 = rule.nodes[:, None]
    z2 = rule.nodes[None, :]
    x = L[0, 0] * z1 + L[0, 1] * z2
    y = L[1, 0] * z1 + L[1, 1] * z2
    vals = np.asarray(g1(x), dtype=np.float64) * np.asarray(g2(y), dtype=np.float64)
    vals = np.broadcast_to(vals, (rule.nodes.size, rule.nodes.size))
    if not np.all(np.isfinite(vals)):
        raise ValidationError("integrand is non-finite on the tensor grid")
    w = rule.weights
    return float(w @ vals @ w)
