"""Denoiser sequences f_0, f_1, ... shared by the three iteration engines.

A FunctionSeq supplies the level-k nonlinearity f_k and its derivative;
both act elementwise on numpy arrays.  All sequences here are bounded with
bounded first derivative, which is what the engines rely on.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


class FunctionSeq:
    """Interface: eval(k, x) -> f_k(x), deriv(k, x) -> f_k'(x), description.

    is_constant(k) declares that f_k takes one value everywhere; the cavity
    engine uses it to keep a level in closed form instead of materializing
    per-subset tables.
    """

    description = "abstract"

    def eval(self, k, x):
        raise NotImplementedError

    def deriv(self, k, x):
        raise NotImplementedError

    def is_constant(self, k):
        return False


class ZeroSeq(FunctionSeq):
    description = "zero"

    def eval(self, k, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def deriv(self, k, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def is_constant(self, k):
        return True


class ConstantSeq(FunctionSeq):
    def __init__(self, c):
        self.c = float(c)
        self.description = f"constant({self.c!r})"

    def eval(self, k, x):
        return np.full_like(np.asarray(x, dtype=np.float64), self.c)

    def deriv(self, k, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def is_constant(self, k):
        return True


class TanhSeq(FunctionSeq):
    """f_k(x) = tanh(x) at every level."""

    description = "tanh"

    def eval(self, k, x):
        return np.tanh(np.asarray(x, dtype=np.float64))

    def deriv(self, k, x):
        return np.cosh(np.asarray(x, dtype=np.float64)) ** -2.0


class BolthausenPreset(FunctionSeq):
    """The TAP-iteration denoisers: f_0 = 0, f_1 = sqrt(q), f_k = tanh(beta*x + h).

    Under this sequence the plain AMP recursion reproduces the TAP
    magnetization iterates through m^[k] = f_k(u^[k]).
    """

    def __init__(self, p, q):
        if q < 0 or q > 1:
            raise ValidationError("BolthausenPreset requires q in [0, 1]")
        self.p = p
        self.q = float(q)
        self.sqrt_q = float(np.sqrt(self.q))
        self.description = f"bolthausen(beta={p.beta!r}, h={p.h!r})"

    def eval(self, k, x):
        x = np.asarray(x, dtype=np.float64)
        if k == 0:
            return np.zeros_like(x)
        if k == 1:
            return np.full_like(x, self.sqrt_q)
        return np.tanh(self.p.beta * x + self.p.h)

    def deriv(self, k, x):
        x = np.asarray(x, dtype=np.float64)
        if k <= 1:
            return np.zeros_like(x)
        return self.p.beta * np.cosh(self.p.beta * x + self.p.h) ** -2.0

    def is_constant(self, k):
        return k <= 1


def check_derivative(fs, k, grid, tol=1e-6, step=1e-6):
    """Max |f_k' - central difference of f_k| over the grid (engine sanity)."""
    grid = np.asarray(grid, dtype=np.float64)
    fd = (fs.eval(k, grid + step) - fs.eval(k, grid - step)) / (2 * step)
    err = float(np.max(np.abs(fd - fs.deriv(k, grid))))
    return err <= tol, err
