"""Iteration engines: AMP, the TAP magnetization recursion, and the cavity
iteration over self-avoiding index subsets.

All three share the norm convention ||x||^2 = (1/n) sum_i x_i^2 and a
denoiser sequence f_0, f_1, ... (see denoisers).  The engines:

  amp_run         u^[k+1]_i = (1/sqrt n) sum_j a_ij f_k(u^[k]_j)
                              - ((1/n) sum_j f_k'(u^[k]_j)) * f_{k-1}(u^[k-1]_i),
                  with no memory term at the first step.
  bolthausen_run  m^[0] = 0, m^[1] = sqrt(q) 1,
                  m^[k+1]_i = tanh((beta/sqrt n) sum_j a_ij m^[k]_j + h
                              - beta^2 (1 - ||m^[k]||^2) m^[k-1]_i);
                  cross-checked against amp_run with the TAP preset through
                  the identity m^[k] = f_k(u^[k]).
  cavity_run      w_{S,i}^[k+1] = (1/sqrt n) sum_{j not in S u {i}} a_ij
                                  f_k(w_{S u {i}, j}^[k]),  w^[k] = w_emptyset^[k].

The cavity recursion is evaluated level-synchronously, bottom-up over
subsets of fixed size, with three per-level representations:

  independent  w_{S,i}^[k] = vec_i for every admissible S (level 0 always;
               propagates whenever the next denoiser image is identically 0)
  lazy         valid when f_{k-1} of the previous level is S-independent
               (previous level independent, or f_{k-1} constant):
               w_{S,i}^[k] = base_i - (1/sqrt n) sum_{j in S} a_ij coeff_j
               with base = (A coeff)/sqrt n, no storage per subset
  dense        per-size arrays indexed by the colexicographic subset rank

Dense levels are the only ones that pay C(n,s)*n storage, and the budget
check counts exactly those cells (plus on-demand cached rows).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np

from .denoisers import BolthausenPreset
from .errors import NumericalError, ResourceError, ValidationError
from .scalars import solve_q

DEFAULT_CELL_BUDGET = 50_000_000  # float64 cells, ~400 MB
AMP_IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class IterTrace:
    kind: str
    vectors: tuple
    norms: tuple
    meta: dict = field(default_factory=dict)

    @property
    def K(self):
        return len(self.vectors) - 1


def _norm_sq(x):
    return float(np.mean(np.square(x)))


def _as_u0(u0, n):
    u0 = np.asarray(u0, dtype=np.float64)
    if u0.shape != (n,):
        raise ValidationError(f"initial vector must have shape ({n},)")
    return u0


def amp_run(A, u0, fs, K):
    """AMP trace u^[0..K]; first step carries no memory term."""
    if K < 1:
        raise ValidationError("amp_run requires K >= 1")
    n = A.n
    u0 = _as_u0(u0, n)
    if _norm_sq(u0) > 1.0 + 1e-12:
        raise ValidationError("initial vector must satisfy (1/n) * sum(u0**2) <= 1")
    rt = sqrt(n)
    vectors = [u0]
    u1 = A.entries @ np.asarray(fs.eval(0, u0), dtype=np.float64) / rt
    vectors.append(u1)
    for k in range(1, K):
        fk = np.asarray(fs.eval(k, vectors[k]), dtype=np.float64)
        onsager = float(np.mean(fs.deriv(k, vectors[k])))
        mem = np.asarray(fs.eval(k - 1, vectors[k - 1]), dtype=np.float64)
        vectors.append(A.entries @ fk / rt - onsager * mem)
    vectors = tuple(v for v in vectors)
    return IterTrace(
        kind="amp",
        vectors=vectors,
        norms=tuple(_norm_sq(v) for v in vectors),
        meta={"denoisers": fs.description},
    )


def bolthausen_run(A, p, K, q=None, rule=None):
    """TAP magnetization trace m^[0..K], verified against its AMP form.

    The verification runs amp_run with the TAP preset and asserts
    max_i |m^[k]_i - tanh(beta u^[k]_i + h)| <= 1e-10 for k >= 2; the
    observed maximum deviation lands in trace.meta["amp_identity_deviation"].
    """
    if K < 1:
        raise ValidationError("bolthausen_run requires K >= 1")
    n = A.n
    if q is None:
        q = solve_q(p, rule=rule).q
    rt = sqrt(n)
    beta, h = p.beta, p.h
    vectors = [np.zeros(n), np.full(n, sqrt(q))]
    for k in range(1, K):
        m_k, m_prev = vectors[k], vectors[k - 1]
        onsager = beta**2 * (1.0 - _norm_sq(m_k))
        vectors.append(np.tanh(beta / rt * (A.entries @ m_k) + h - onsager * m_prev))
    vectors = vectors[: K + 1]

    preset = BolthausenPreset(p, q)
    amp = amp_run(A, np.zeros(n), preset, K)
    deviation = 0.0
    for k in range(2, K + 1):
        gap = float(np.max(np.abs(vectors[k] - np.tanh(beta * amp.vectors[k] + h))))
        deviation = max(deviation, gap)
    if deviation > AMP_IDENTITY_TOL:
        raise NumericalError(
            f"TAP/AMP identity drift {deviation!r} exceeds {AMP_IDENTITY_TOL}"
        )
    return IterTrace(
        kind="bolthausen",
        vectors=tuple(vectors),
        norms=tuple(_norm_sq(v) for v in vectors),
        meta={"q": float(q), "amp_identity_deviation": deviation, "denoisers": preset.description},
    )


# --- cavity engine ---------------------------------------------------------


def subset_rank(S):
    """Colexicographic rank of a sorted index tuple."""
    return sum(comb(c, t + 1) for t, c in enumerate(S))


@dataclass
class _Ind:
    vec: np.ndarray


@dataclass
class _Lazy:
    base: np.ndarray
    coeff: np.ndarray


@dataclass
class _Dense:
    tables: dict  # size -> array (C(n, size), n)


@dataclass
class CavityTable:
    K: int
    n: int
    budget: int
    cells_allocated: int
    levels: dict  # level k -> _Ind | _Lazy | _Dense
    u0: np.ndarray
    fs: object
    A: object
    extra: dict = field(default_factory=dict)  # (k, T) -> cached on-demand row

    def level_kind(self, k):
        return type(self.levels[k]).__name__.lstrip("_").lower()

    def stored_sizes(self, k):
        rep = self.levels[k]
        return sorted(rep.tables.keys()) if isinstance(rep, _Dense) else []


def _plan_kinds(A, u0, fs, K):
    """Walk levels 0..K, fixing each representation kind and cheap payloads.

    Returns (reps, dense_plan) where dense levels carry None payloads to be
    assembled later and dense_plan lists (level, size) tables to allocate.
    """
    n = A.n
    rt = sqrt(n)
    reps = {0: _Ind(np.asarray(u0, dtype=np.float64))}
    dense_plan = []
    for k in range(1, K + 1):
        prev = reps[k - 1]
        if isinstance(prev, _Ind):
            coeff = np.asarray(fs.eval(k - 1, prev.vec), dtype=np.float64)
        elif fs.is_constant(k - 1):
            coeff = np.full(n, float(np.asarray(fs.eval(k - 1, np.float64(0.0)))))
        else:
            coeff = None
        if coeff is not None:
            if not np.any(coeff):
                reps[k] = _Ind(np.zeros(n))
            else:
                reps[k] = _Lazy(base=A.entries @ coeff / rt, coeff=coeff)
        else:
            reps[k] = _Dense(tables={})
            for s in range(0, K - k + 1):
                dense_plan.append((k, s))
    return reps, dense_plan


def _row(table, k, T):
    """Full row w_{T, .}^[k] as an n-vector (entries at T positions unspecified)."""
    rep = table.levels[k]
    if isinstance(rep, _Ind):
        return rep.vec
    if isinstance(rep, _Lazy):
        if not T:
            return rep.base
        idx = np.asarray(T, dtype=np.intp)
        return rep.base - table.A.entries[:, idx] @ rep.coeff[idx] / sqrt(table.n)
    if len(T) in rep.tables:
        return rep.tables[len(T)][subset_rank(T)]
    key = (k, T)
    cached = table.extra.get(key)
    if cached is None:
        cached = _assemble_row(table, k, T)
        table.cells_allocated += table.n
        if table.cells_allocated > table.budget:
            raise ResourceError(
                f"cavity cell budget exceeded: {table.cells_allocated} cells needed, "
                f"budget {table.budget}"
            )
        table.extra[key] = cached
    return cached


def _assemble_row(table, k, T):
    n, A, fs = table.n, table.A.entries, table.fs
    rt = sqrt(n)
    out = np.full(n, np.nan)
    in_T = np.zeros(n, dtype=bool)
    in_T[list(T)] = True
    for i in range(n):
        if in_T[i]:
            continue
        Ti = tuple(sorted(T + (i,)))
        prev_vals = np.asarray(fs.eval(k - 1, _row(table, k - 1, Ti)), dtype=np.float64)
        mask = ~in_T
        mask[i] = False
        out[i] = A[i, mask] @ prev_vals[mask] / rt
    return out


def _assemble_dense(table, k, s):
    """Fill the size-s table of level k by grouping cells over T = S u {i}."""
    n, A, fs = table.n, table.A.entries, table.fs
    rt = sqrt(n)
    dest = np.full((comb(n, s), n), np.nan)
    for T in itertools.combinations(range(n), s + 1):
        prev_vals = np.asarray(fs.eval(k - 1, _row(table, k - 1, T)), dtype=np.float64)
        mask = np.ones(n, dtype=bool)
        mask[list(T)] = False
        masked_prev = prev_vals[mask]
        for i in T:
            S = tuple(x for x in T if x != i)
            dest[subset_rank(S), i] = A[i, mask] @ masked_prev / rt
    table.levels[k].tables[s] = dest


def cavity_run(A, u0, fs, K, budget=DEFAULT_CELL_BUDGET):
    """Cavity trace w^[0..K] plus the table of per-subset values.

    Each w^[k] is the root (S = emptyset) of its own depth-k recursion; the
    per-level tables are shared between roots wherever (level, subset size)
    coincide.  Dense tables are only allocated where no independent/lazy
    shortcut applies, and the planned cell count is checked against the
    budget before any allocation.
    """
    n = A.n
    if K < 0:
        raise ValidationError("cavity_run requires K >= 0")
    if n < K + 1:
        raise ValidationError(f"cavity_run requires n >= K+1 (got n={n}, K={K})")
    u0 = _as_u0(u0, n)

    reps, dense_plan = _plan_kinds(A, u0, fs, K)
    planned_cells = sum(comb(n, s) * n for _, s in dense_plan)
    if planned_cells > budget:
        raise ResourceError(
            f"cavity cell budget exceeded: {planned_cells} cells planned for dense "
            f"levels {sorted(set(k for k, _ in dense_plan))}, budget {budget}"
        )
    table = CavityTable(
        K=K, n=n, budget=int(budget), cells_allocated=planned_cells,
        levels=reps, u0=u0, fs=fs, A=A,
    )
    # assemble dense levels bottom-up, largest subset size first within a level
    for k, s in sorted(dense_plan, key=lambda ks: (ks[0], -ks[1])):
        _assemble_dense(table, k, s)

    vectors = []
    for k in range(K + 1):
        rep = table.levels[k]
        if isinstance(rep, _Ind):
            vectors.append(rep.vec.copy())
        elif isinstance(rep, _Lazy):
            vectors.append(rep.base.copy())
        else:
            vectors.append(rep.tables[0][0].copy())
    trace = IterTrace(
        kind="cavity",
        vectors=tuple(vectors),
        norms=tuple(_norm_sq(v) for v in vectors),
        meta={
            "denoisers": fs.description,
            "cells_allocated": table.cells_allocated,
            "level_kinds": {k: table.level_kind(k) for k in range(K + 1)},
        },
    )
    return trace, table


def cavity_subset_value(A, table, S, i, k):
    """w_{S,i}^[k], read from the table or computed (and cached) on demand."""
    i = int(i)
    S = tuple(sorted(int(s) for s in S))
    if i in S:
        raise ValidationError("cavity_subset_value requires i not in S")
    if not (0 <= k <= table.K):
        raise ValidationError(f"level k={k} outside the table depth 0..{table.K}")
    if any(s < 0 or s >= table.n for s in S) or not (0 <= i < table.n):
        raise ValidationError("index out of range")
    if len(S) > table.n - (k + 1):
        raise ValidationError(
            f"subset too large at level {k}: |S| must be <= n-(k+1) = {table.n - (k + 1)}"
        )
    if A is not table.A and (A.n != table.A.n or A.seed != table.A.seed):
        raise ValidationError("matrix does not match the one the table was built from")
    if k == 0:
        return float(table.u0[i])
    return float(_row(table, k, S)[i])
