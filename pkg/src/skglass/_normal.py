"""Pinned inverse CDF of the standard normal distribution.

The disorder generator maps hashed 64-bit uniforms through the inverse
normal CDF.  Bit-reproducibility of every coupling matrix therefore
requires an inverse-CDF whose code never changes underneath us, so the
rational approximation is vendored here instead of imported from scipy.

This is Wichura's PPND16 scheme: one rational approximation for the
central region |p - 1/2| <= 0.425 in the variable r = 0.180625 - (p-1/2)^2,
and two more for the tails in r = sqrt(-log(min(p, 1-p))).  Relative
accuracy is about 1e-16 over (0, 1); the tests cross-check against an
independent erf-based bisection.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _ratpoly(coeff_num, coeff_den, r):
    num = np.full_like(r, coeff_num[7])
    den = np.full_like(r, coeff_den[7])
    for t in range(6, -1, -1):
        num = num * r + coeff_num[t]
        den = den * r + coeff_den[t]
    return num / den


def inverse_normal_cdf(p):
    """Quantile function of N(0,1), elementwise on arrays, p in (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValidationError("inverse_normal_cdf requires p strictly inside (0, 1)")
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if np.any(central):
        r = 0.180625 - q[central] * q[central]
        out[central] = q[central] * _ratpoly(_A, _B, r)

    tail = ~central
    if np.any(tail):
        pt = np.where(q[tail] < 0.0, p[tail], 1.0 - p[tail])
        r = np.sqrt(-np.log(pt))
        near = r <= 5.0
        val = np.empty_like(r)
        if np.any(near):
            val[near] = _ratpoly(_C, _D, r[near] - 1.6)
        if np.any(~near):
            val[~near] = _ratpoly(_E, _F, r[~near] - 5.0)
        out[tail] = np.where(q[tail] < 0.0, -val, val)
    return out
