"""Scalar fixed-point machinery.

The central scalar is q = q(beta, h), the solution of

    q = E tanh^2(beta*z*sqrt(q) + h),   z ~ N(0,1),

unique for h > 0.  Around it live the AT-condition value
beta^2 * E cosh^-4(beta*z*sqrt(q) + h), the replica-symmetric free energy
log 2 + beta^2/4*(1-q)^2 + E log cosh(beta*z*sqrt(q) + h), the overlap
start Q = sqrt(q) * E tanh(beta*z*sqrt(q) + h), and the one-dimensional
maps

    Gamma(t; g, g') = E[ Th(b*z*sqrt(g|t|)  + b*z1*sqrt(g(1-|t|)))
                       * Th(b*sgn(t)*z*sqrt(g'|t|) + b*z2*sqrt(g'(1-|t|))) ]
    Delta(t)        = Gamma(t/q; q, q)  on [-q, q],

with Th(x) = tanh(x + h) and z, z1, z2 independent standard normals.
Inside the AT region Delta is increasing with slope < 1, so its orbit
started at Q climbs monotonically to q; delta_orbit materializes that
sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .quadrature import default_rule, expect_gaussian

MAX_FIXED_POINT_ITER = 500
DAMPING = 0.5


@dataclass(frozen=True)
class ModelParams:
    beta: float
    h: float

    def __post_init__(self):
        if not np.isfinite(self.beta) or not np.isfinite(self.h):
            raise ValidationError("beta and h must be finite")
        # beta = 0 / h = 0 are admitted for limiting and degenerate checks
        if self.beta < 0 or self.h < 0:
            raise ValidationError("beta and h must be nonnegative")


@dataclass(frozen=True)
class ScalarSolution:
    q: float
    at_gap: float
    q_residual: float
    iterations: int


def _q_map(q, p, rule):
    """Right-hand side E tanh^2(beta*z*sqrt(q) + h)."""
    scale = p.beta * np.sqrt(max(q, 0.0))
    return expect_gaussian(lambda z: np.tanh(scale * z + p.h) ** 2, rule)


def _at_gap(q, p, rule):
    scale = p.beta * np.sqrt(max(q, 0.0))
    return p.beta**2 * expect_gaussian(lambda z: np.cosh(scale * z + p.h) ** -4.0, rule)


def solve_q(p, tol=1e-12, rule=None, max_iter=MAX_FIXED_POINT_ITER):
    """Solve q = E tanh^2(beta*z*sqrt(q) + h) on [0, 1].

    Damped fixed-point iteration (damping 0.5); if it has not met `tol`
    within `max_iter` steps, falls back to bisection on q - E tanh^2,
    which brackets in [0, 1] because the map sends [0, 1] into itself.
    """
    if tol <= 0:
        raise ValidationError("solve_q requires tol > 0")
    rule = rule or default_rule()

    q = np.tanh(p.h) ** 2 if p.h > 0 else min(0.5, p.beta**2 / 2 + 1e-3)
    iterations = 0
    residual = q - _q_map(q, p, rule)
    while abs(residual) >= tol and iterations < max_iter:
        q = (1.0 - DAMPING) * q + DAMPING * _q_map(q, p, rule)
        q = min(max(q, 0.0), 1.0)
        residual = q - _q_map(q, p, rule)
        iterations += 1

    if abs(residual) >= tol:
        lo, hi = 0.0, 1.0
        flo = lo - _q_map(lo, p, rule)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fmid = mid - _q_map(mid, p, rule)
            if abs(fmid) < tol:
                q, residual = mid, fmid
                break
            if (flo <= 0) == (fmid <= 0):
                lo, flo = mid, fmid
            else:
                hi = mid
            iterations += 1
        else:
            raise NumericalError(
                f"solve_q did not converge: last residual {residual!r} at q={q!r}"
            )
        residual = q - _q_map(q, p, rule)
        if abs(residual) >= tol:
            raise NumericalError(
                f"solve_q did not converge: last residual {residual!r} at q={q!r}"
            )

    return ScalarSolution(
        q=float(q),
        at_gap=float(_at_gap(q, p, rule)),
        q_residual=float(residual),
        iterations=iterations,
    )


def rs_free_energy(p, q=None, rule=None):
    """log 2 + beta^2/4 (1-q)^2 + E log cosh(beta*z*sqrt(q) + h)."""
    rule = rule or default_rule()
    if q is None:
        q = solve_q(p, rule=rule).q
    scale = p.beta * np.sqrt(max(q, 0.0))
    tail = expect_gaussian(lambda z: _log_cosh(scale * z + p.h), rule)
    return float(np.log(2.0) + p.beta**2 / 4.0 * (1.0 - q) ** 2 + tail)


def _log_cosh(x):
    # overflow-safe: log cosh x = |x| + log1p(exp(-2|x|)) - log 2
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


def big_q(p, q=None, rule=None):
    """Q(beta, h) = sqrt(q) * E tanh(beta*z*sqrt(q) + h)."""
    rule = rule or default_rule()
    if q is None:
        q = solve_q(p, rule=rule).q
    scale = p.beta * np.sqrt(max(q, 0.0))
    return float(np.sqrt(max(q, 0.0)) * expect_gaussian(lambda z: np.tanh(scale * z + p.h), rule))


def gamma_map(t, gam, gamp, p, rule=None):
    """The auxiliary bivariate-overlap map Gamma(t; gam, gamp).

    Evaluated as an outer expectation over z of the product of the two
    inner one-dimensional expectations (z1 and z2 integrate out
    independently given z): O(m^2) integrand evaluations.
    """
    t = float(t)
    if abs(t) > 1.0:
        raise ValidationError("gamma_map requires |t| <= 1")
    if gam < 0 or gamp < 0:
        raise ValidationError("gamma_map requires gam, gamp >= 0")
    rule = rule or default_rule()
    b, h = p.beta, p.h
    at = abs(t)
    sgn = 1.0 if t >= 0 else -1.0

    z = rule.nodes[:, None]  # outer
    zi = rule.nodes[None, :]  # inner
    w = rule.weights

    inner1 = np.tanh(b * np.sqrt(gam * at) * z + b * np.sqrt(gam * (1 - at)) * zi + h) @ w
    inner2 = np.tanh(b * sgn * np.sqrt(gamp * at) * z + b * np.sqrt(gamp * (1 - at)) * zi + h) @ w
    return float(w @ (inner1 * inner2))


def delta_map(t, p, q=None, rule=None, with_flag=False):
    """Delta(t) = Gamma(t/q; q, q) on [-q, q].

    Inputs and outputs outside [-q, q] are clamped to the boundary;
    `with_flag=True` additionally returns whether clamping happened.
    Rounding can overshoot the boundary by roughly the solve_q residual
    (Delta(q) = E tanh^2 evaluated at the solved q), so orbit arithmetic
    relies on the clamp to stay inside the interval.
    """
    rule = rule or default_rule()
    if q is None:
        q = solve_q(p, rule=rule).q
    clamped = False
    t = float(t)
    if q <= 0.0:
        # degenerate point mass at q = 0: Delta collapses to tanh(h)^2 = q = 0
        value = q
        clamped = t != 0.0
    else:
        if t > q:
            t, clamped = q, True
        elif t < -q:
            t, clamped = -q, True
        value = gamma_map(t / q, q, q, p, rule=rule)
        if value > q:
            value, clamped = q, True
        elif value < -q:
            value, clamped = -q, True
    return (value, clamped) if with_flag else value


def delta_orbit(p, K, tol=0.0, rule=None):
    """[Q, Delta(Q), Delta(Delta(Q)), ...], up to K+1 terms.

    Stops early once the next term would differ from the last by less
    than `tol`; the sub-tol term is not appended, so with tol > 0 every
    retained consecutive gap is at least tol (tol = 0 disables early
    stopping and always returns K+1 terms).
    """
    if K < 1:
        raise ValidationError("delta_orbit requires K >= 1")
    rule = rule or default_rule()
    q = solve_q(p, rule=rule).q
    orbit = [big_q(p, q=q, rule=rule)]
    for _ in range(K):
        nxt = delta_map(orbit[-1], p, q=q, rule=rule)
        if tol > 0 and abs(nxt - orbit[-1]) < tol:
            break
        orbit.append(nxt)
    return orbit
