"""Random submatrices of step Latinons and the tools around the sampling lemma."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log2

import numpy as np

from . import exceptions as exc
from ._rng import derive_seed, rng_for
from .distance import delta_upper
from .patterns import Pattern, canonicalize
from .step import IntervalPartition, SemiLatinon, StepBigraphon

__all__ = [
    "SampledMatrix",
    "sample_matrix",
    "associate_semilatinon",
    "spread_check",
    "SpreadResult",
    "subsample_bigraphon",
    "sampling_experiment",
]


@dataclass(frozen=True)
class SampledMatrix:
    k: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    seed: int

    @property
    def pattern(self):
        return canonicalize(self.values)


def _draw_values(W, ci, cj, rng):
    cum = np.cumsum(W.alpha[np.ix_(ci, cj)], axis=2)
    cum[..., -1] = 1.0
    u = rng.random(cum.shape[:2])
    q = np.minimum((cum <= u[..., None]).sum(axis=-1), cum.shape[2] - 1)
    return W.value_parts.boundaries[q] + W.value_parts.lengths[q] * rng.random(cum.shape[:2])


def sample_matrix(W, k, seed=0):
    """Sample a ``k x k`` matrix from ``W``: sorted uniform rows and columns, values from the cell mixtures."""
    if k < 1:
        raise exc.ValidationError("k must be positive")
    rng = rng_for(seed, k)
    rows = np.sort(rng.random(k))
    cols = np.sort(rng.random(k))
    ci = W.row_parts.cell_of(rows)
    cj = W.col_parts.cell_of(cols)
    values = _draw_values(W, ci, cj, rng)
    while np.unique(values).size < values.size:  # probability zero up to float collisions
        values = _draw_values(W, ci, cj, rng)
    for a in (rows, cols, values):
        a.flags.writeable = False
    return SampledMatrix(k, rows, cols, values, int(seed))


def associate_semilatinon(A, depth=None):
    """The semilatinon of a square matrix, sample or pattern.

    A pattern ``C`` of size ``k x k`` puts all mass of cell ``(i, j)`` on
    value cell ``C[i, j]`` of ``k**2`` equal cells. A real matrix (or a
    sampled matrix) puts a point mass on the dyadic value cell of depth
    ``depth`` that contains each entry; a value on a cell boundary goes to
    the cell on its left.
    """
    if isinstance(A, Pattern):
        C = A.entries
        k = C.shape[0]
        if C.shape[1] != k:
            raise exc.NotSquare("associated semilatinons need square input")
        d = k * k
        alpha = np.zeros((k, k, d))
        i = np.arange(k)
        alpha[i[:, None], i[None, :], C - 1] = 1.0
        p = IntervalPartition.uniform(k)
        return SemiLatinon(p, p, IntervalPartition.uniform(d), alpha)
    values = A.values if isinstance(A, SampledMatrix) else np.asarray(A, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise exc.NotSquare("associated semilatinons need square input")
    k = values.shape[0]
    if depth is None:
        depth = max(1, ceil(log2(k * k)))
    D = 2 ** depth
    cell = np.clip(np.ceil(values * D).astype(np.int64) - 1, 0, D - 1)
    alpha = np.zeros((k, k, D))
    i = np.arange(k)
    alpha[i[:, None], i[None, :], cell] = 1.0
    p = IntervalPartition.uniform(k)
    return SemiLatinon(p, p, IntervalPartition.dyadic(depth), alpha)


@dataclass(frozen=True)
class SpreadResult:
    spread: bool
    discrepancy: float
    interval: tuple
    closed: bool

    def __bool__(self):
        return self.spread


def spread_check(S, eps):
    """Is the multiset ``S`` ``eps``-spread: ``| |I ∩ S| / |S| - len(I) | <= eps`` for every interval ``I``?

    Too many points: the worst interval is closed with both ends on points,
    giving ``max_{u <= v} (F(v) - F(u-)) / N - (v - u)``. Too few points: the
    worst interval is open between consecutive candidates in
    ``{0} ∪ S ∪ {1}``, giving ``max_{u < v} (v - u) - (F(v-) - F(u)) / N``.
    Both maxima are found in one pass with running extrema.
    """
    x = np.sort(np.asarray(S, dtype=float).ravel())
    N = x.size
    if N == 0:
        raise exc.ValidationError("empty multiset")
    vals, counts = np.unique(x, return_counts=True)
    F = np.cumsum(counts) / N  # F(v): fraction <= v
    Fm = F - counts / N  # F(v-): fraction < v
    # over-count on closed [u, v]
    a = F - vals
    b = Fm - vals
    run_min = np.minimum.accumulate(b)
    arg_min = _running_argmin(b)
    over = a - run_min
    j = int(np.argmax(over))
    over_val = float(over[j])
    over_iv = (float(vals[arg_min[j]]), float(vals[j]))
    # under-count on open (u, v) with u, v in {0} ∪ vals ∪ {1}
    grid = np.concatenate([[0.0], vals, [1.0]])
    Fg = np.concatenate([[np.sum(x <= 0.0) / N], F, [1.0]])  # fraction <= u
    Fgm = np.concatenate([[0.0], Fm, [np.sum(x < 1.0) / N]])  # fraction < v
    c = Fg - grid  # for left endpoints
    dv = grid - Fgm  # for right endpoints
    run_max = np.maximum.accumulate(c[:-1])
    arg_max = _running_argmax(c[:-1])
    under = dv[1:] + run_max
    k = int(np.argmax(under))
    under_val = float(under[k])
    under_iv = (float(grid[arg_max[k]]), float(grid[k + 1]))
    if over_val >= under_val:
        return SpreadResult(over_val <= eps, over_val, over_iv, True)
    return SpreadResult(under_val <= eps, under_val, under_iv, False)


def _running_argmin(a):
    out = np.empty(a.size, dtype=np.int64)
    best = 0
    for i in range(a.size):
        if a[i] < a[best]:
            best = i
        out[i] = best
    return out


def _running_argmax(a):
    out = np.empty(a.size, dtype=np.int64)
    best = 0
    for i in range(a.size):
        if a[i] > a[best]:
            best = i
        out[i] = best
    return out


def subsample_bigraphon(U, S, T):
    """``U[S, T]``: ``k`` equal cells per side, cell ``(i, j)`` takes the value ``U(S_i, T_j)``."""
    S = np.asarray(S, dtype=float)
    T = np.asarray(T, dtype=float)
    vals = U.values[np.ix_(U.row_parts.cell_of(S), U.col_parts.cell_of(T))]
    return StepBigraphon(IntervalPartition.uniform(len(S)), IntervalPartition.uniform(len(T)), vals)


@dataclass
class SamplingStats:
    k: int
    values: list
    median: float
    p95: float
    details: list = field(default_factory=list)

    def as_row(self):
        return {"k": self.k, "replicas": len(self.values), "median": repr(self.median), "p95": repr(self.p95),
                "min": repr(min(self.values)), "max": repr(max(self.values))}


def sampling_experiment(W, ks=(8, 16, 32), replicas=10, seed=0, depth=4, M=None, search_budget=64,
                        restarts=8):
    """Distance between ``W`` and the semilatinons of its random samples, per sample size.

    For every ``k`` and replica a ``k x k`` sample is drawn, turned into its
    associated semilatinon (dyadic values of the given ``depth``) and
    compared with ``W`` by :func:`delta_upper` on ``M`` cells (``M = k`` by
    default). Returns one :class:`SamplingStats` per ``k``.
    """
    out = []
    for k in ks:
        if k > 64:
            raise exc.BudgetExceeded("sampling experiments are limited to k <= 64")
        vals = []
        details = []
        for r in range(replicas):
            s = derive_seed(seed, k, r)
            A = associate_semilatinon(sample_matrix(W, k, s), depth=depth)
            est = delta_upper(W, A, M=k if M is None else M, search_budget=search_budget, seed=s,
                              restarts=restarts)
            vals.append(float(est.upper))
            details.append(est)
        v = np.array(vals)
        out.append(SamplingStats(k, vals, float(np.median(v)), float(np.quantile(v, 0.95)), details))
    return out
