"""Cut norms of step functions and of differences of distribution-valued step functions.

Everything works on *cell masses*: ``w[i, j] = value(i, j) * len(P_i) * len(C_j)``.
The cut norm of a step function is then ``max over row sets S and column
sets T of |sum_{S x T} w|``, because an optimal measurable set can always be
taken to be a union of whole cells.

Three evaluators are provided:

* ``exact``: enumerate all subsets of the smaller side (Gray code order),
  completing the other side greedily for each sign;
* ``local_search``: alternating maximisation from random starts, a lower
  bound with a certificate;
* ``group_upper_bound``: split the rows into groups small enough for exact
  enumeration and add the per-group optima. Each group may pick its own
  column set, so the sum can only overestimate: a certified upper bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import exceptions as exc
from ._rng import rng_for
from .step import SemiLatinon, StepBigraphon

EXACT_LIMIT = 22
GROUP_SIZE = 16
LOCAL_STARTS = 64

__all__ = [
    "CutNormResult",
    "cutnorm_step",
    "cutnorm_masses",
    "cutnorm_distval",
    "order_displacement",
    "displacement_masses",
    "group_upper_bound",
    "evaluate_certificate",
]


@dataclass(frozen=True)
class CutNormResult:
    """A cut-norm value with the sets attaining it.

    ``rows`` and ``cols`` are boolean masks over cells; ``value_interval``
    is ``(first, stop)``, the half-open range of value cells, or ``None`` for
    plain step functions. ``value`` is the integral over the certificate, so
    it is a lower bound on the norm, and equals it when ``exact``. ``upper``
    is a certified upper bound (equal to ``value`` when exact).
    """

    value: float
    rows: np.ndarray
    cols: np.ndarray
    exact: bool
    upper: float
    value_interval: tuple | None = None
    sign: int = 1
    extra: dict = field(default_factory=dict, compare=False)

    def certificate(self):
        return {
            "rows": np.flatnonzero(self.rows).tolist(),
            "cols": np.flatnonzero(self.cols).tolist(),
            "value_cells": None if self.value_interval is None else list(self.value_interval),
            "sign": self.sign,
        }


# ------------------------------------------------------------------ kernels


@njit(cache=True)
def _exact_kernel(w):
    """For each matrix ``w[b]`` (rows = small side) return the best +/- sums and row masks."""
    B, m, n = w.shape
    best_p = np.zeros(B)
    best_n = np.zeros(B)
    mask_p = np.zeros(B, np.int64)
    mask_n = np.zeros(B, np.int64)
    s = np.zeros(n)
    for b in range(B):
        for j in range(n):
            s[j] = 0.0
        mask = 0
        bp = 0.0
        bn = 0.0
        mp = 0
        mn = 0
        for g in range(1, 1 << m):
            bit = 0
            while not (g >> bit) & 1:
                bit += 1
            mask ^= 1 << bit
            if (mask >> bit) & 1:
                for j in range(n):
                    s[j] += w[b, bit, j]
            else:
                for j in range(n):
                    s[j] -= w[b, bit, j]
            p = 0.0
            q = 0.0
            for j in range(n):
                if s[j] > 0:
                    p += s[j]
                else:
                    q -= s[j]
            if p > bp:
                bp = p
                mp = mask
            if q > bn:
                bn = q
                mn = mask
        best_p[b] = bp
        best_n[b] = bn
        mask_p[b] = mp
        mask_n[b] = mn
    return best_p, best_n, mask_p, mask_n


def _mask_to_bool(mask, m):
    return np.array([(int(mask) >> i) & 1 for i in range(m)], dtype=bool)


def _complete(w, rows, sign):
    colsum = sign * w[rows].sum(axis=0)
    return colsum > 0


def evaluate_certificate(w, rows, cols):
    """``sum_{rows x cols} w`` computed directly from the masks."""
    return float(w[np.ix_(np.asarray(rows, bool), np.asarray(cols, bool))].sum())


def _exact_batch(W):
    """Exact optimum for a batch ``W`` of shape ``(B, m_r, m_c)``; returns (value, rows, cols, sign) per item."""
    B, m_r, m_c = W.shape
    flip = m_r > m_c
    X = np.ascontiguousarray(np.swapaxes(W, 1, 2) if flip else W, dtype=float)
    m = X.shape[1]
    if m > 62:
        raise exc.TooManyCellsForExact(f"{m} cells on the smaller side")
    bp, bn, mp, mn = _exact_kernel(X)
    out = []
    for b in range(B):
        sign = 1 if bp[b] >= bn[b] else -1
        small = _mask_to_bool(mp[b] if sign > 0 else mn[b], m)
        other = _complete(X[b], small, sign)
        rows, cols = (other, small) if flip else (small, other)
        val = abs(evaluate_certificate(W[b], rows, cols))
        out.append((val, rows, cols, sign, max(bp[b], bn[b])))
    return out


def _local_search(w, seed=0, starts=LOCAL_STARTS, max_iter=200):
    m_r, m_c = w.shape
    rng = rng_for(seed, m_r, m_c)
    init = rng.random((starts, m_r)) < 0.5
    best = (0.0, np.zeros(m_r, bool), np.zeros(m_c, bool), 1)
    for sign in (1, -1):
        X = sign * w
        S = init.copy()
        for _ in range(max_iter):
            T = (S.astype(float) @ X) > 0
            S_new = (T.astype(float) @ X.T) > 0
            if np.array_equal(S_new, S):
                break
            S = S_new
        T = (S.astype(float) @ X) > 0
        vals = np.einsum("si,ij,sj->s", S.astype(float), X, T.astype(float))
        b = int(np.argmax(vals))
        if vals[b] > best[0] + 1e-15:
            best = (float(vals[b]), S[b].copy(), T[b].copy(), sign)
    val = abs(evaluate_certificate(w, best[1], best[2]))
    return val, best[1], best[2], best[3]


def _orderings(m, group):
    """Row orders whose consecutive chunks form the groups: contiguous, then interleaved."""
    orders = [np.arange(m)]
    stride = -(-m // group)
    if stride > 1:
        orders.append(np.concatenate([np.arange(s, m, stride) for s in range(stride)]))
    return orders


def _grouped(W, order, group):
    B = W.shape[0]
    tot_p = np.zeros(B)
    tot_n = np.zeros(B)
    for start in range(0, len(order), group):
        part = np.ascontiguousarray(W[:, order[start:start + group], :])
        bp, bn, _, _ = _exact_kernel(part)
        tot_p += bp
        tot_n += bn
    return np.maximum(tot_p, tot_n)


def group_upper_bound(w, group=GROUP_SIZE):
    """Certified upper bound on the cut norm of cell masses ``w`` (2-D) or a batch (3-D).

    The rows are cut into groups of at most ``group`` cells and the bound is
    ``max(sum_g best_plus_g, sum_g best_minus_g)``. Several groupings are
    tried (contiguous and interleaved, on rows and on columns) and the
    smallest bound is kept for each matrix of the batch.
    """
    W = np.asarray(w, dtype=float)
    single = W.ndim == 2
    if single:
        W = W[None]
    if min(W.shape[1:]) <= group:
        X = W if W.shape[1] <= W.shape[2] else np.swapaxes(W, 1, 2)
        bp, bn, _, _ = _exact_kernel(np.ascontiguousarray(X))
        res = np.maximum(bp, bn)
        return float(res[0]) if single else res
    res = np.full(W.shape[0], np.inf)
    for X in (W, np.swapaxes(W, 1, 2)):
        for order in _orderings(X.shape[1], group):
            res = np.minimum(res, _grouped(X, order, group))
    return float(res[0]) if single else res


# ------------------------------------------------------------------ public API


def _merge_identical(w):
    """Sum equal rows and equal columns of ``w``; returns the merged matrix and the group of each index.

    Equal rows contribute equally to any rectangle, so an optimal row set
    takes all of them or none, and the cut norm is unchanged by merging.
    """
    _, rinv = np.unique(w, axis=0, return_inverse=True)
    _, cinv = np.unique(w, axis=1, return_inverse=True)
    rinv, cinv = rinv.ravel(), cinv.ravel()
    merged = np.zeros((rinv.max() + 1, cinv.max() + 1))
    np.add.at(merged, (rinv[:, None], cinv[None, :]), w)
    return merged, rinv, cinv


def cutnorm_masses(w, mode="exact", seed=0, exact_limit=EXACT_LIMIT, certify=True):
    """Cut norm of a matrix of cell masses.

    Repeated rows and columns are merged first, so the exact limit applies
    to the number of distinct rows and columns.
    """
    w = np.asarray(w, dtype=float)
    if w.size and min(w.shape) > 1:
        merged, rinv, cinv = _merge_identical(w)
        if merged.shape != w.shape:
            res = cutnorm_masses(merged, mode=mode, seed=seed, exact_limit=exact_limit, certify=certify)
            rows, cols = res.rows[rinv], res.cols[cinv]
            val = abs(evaluate_certificate(w, rows, cols))
            return CutNormResult(val, rows, cols, res.exact, max(res.upper, val), sign=res.sign)
    m = min(w.shape)
    if mode == "auto":
        mode = "exact" if m <= exact_limit else "local_search"
    if mode == "exact":
        if m > exact_limit:
            raise exc.TooManyCellsForExact(f"exact mode needs min(m_r, m_c) <= {exact_limit}, got {m}")
        val, rows, cols, sign, _ = _exact_batch(w[None])[0]
        return CutNormResult(val, rows, cols, True, val, sign=sign)
    if mode == "local_search":
        val, rows, cols, sign = _local_search(w, seed)
        upper = group_upper_bound(w) if certify else float("inf")
        return CutNormResult(val, rows, cols, upper <= val, max(upper, val), sign=sign)
    raise exc.ValidationError(f"unknown mode {mode!r}")


def cutnorm_step(D, mode="exact", seed=0, exact_limit=EXACT_LIMIT, certify=True):
    """Cut norm of a signed step bigraphon."""
    return cutnorm_masses(D.cell_masses(), mode=mode, seed=seed, exact_limit=exact_limit, certify=certify)


def _check_common(a, b):
    if a.row_parts != b.row_parts or a.col_parts != b.col_parts or a.value_parts != b.value_parts:
        raise exc.PartitionMismatch("both operands must share row, column and value partitions")


def interval_masses(a, b):
    """Masses of ``a - b`` on every value interval made of whole cells.

    Returns ``(masses, intervals)`` with ``masses`` of shape ``(I, m_r, m_c)``
    and ``intervals`` a list of ``(first, stop)`` cell ranges.
    """
    _check_common(a, b)
    delta = a.masses() - b.masses()
    d = delta.shape[2]
    prefix = np.concatenate([np.zeros(delta.shape[:2] + (1,)), np.cumsum(delta, axis=2)], axis=2)
    intervals = [(p, q) for p in range(d) for q in range(p + 1, d + 1)]
    P = np.array([p for p, _ in intervals])
    Q = np.array([q for _, q in intervals])
    masses = np.moveaxis(prefix[:, :, Q] - prefix[:, :, P], 2, 0)
    return masses, intervals


def cutnorm_distval(a, b, mode="auto", seed=0, exact_limit=EXACT_LIMIT, certify=True):
    """Cut norm of the difference of two (semi)Latinons on common partitions.

    The supremum over value intervals is attained with endpoints on value
    cell boundaries: inside a value cell the distribution is uniform, so the
    integral over ``S x T x V`` is affine in each endpoint of ``V`` there.
    """
    masses, intervals = interval_masses(a, b)
    m = min(masses.shape[1:])
    if mode == "auto":
        mode = "exact" if m <= exact_limit else "local_search"
    if mode == "exact":
        if m > exact_limit:
            raise exc.TooManyCellsForExact(f"exact mode needs min(m_r, m_c) <= {exact_limit}, got {m}")
        res = _exact_batch(masses)
        best = max(range(len(res)), key=lambda i: res[i][0])
        val, rows, cols, sign, _ = res[best]
        return CutNormResult(val, rows, cols, True, val, intervals[best], sign)
    if mode == "local_search":
        best = None
        for i, w in enumerate(masses):
            val, rows, cols, sign = _local_search(w, seed)
            if best is None or val > best[0]:
                best = (val, rows, cols, sign, i)
        upper = float(np.max(group_upper_bound(masses))) if certify else float("inf")
        val, rows, cols, sign, i = best
        return CutNormResult(val, rows, cols, upper <= val, max(upper, val), intervals[i], sign)
    raise exc.ValidationError(f"unknown mode {mode!r}")


def distval_row_bound(a_alpha_masses, b_alpha_masses):
    """Cheap upper bound on the distribution-valued cut norm: per-row optimisation.

    Takes cell-mass tensors of shape ``(m_r, m_c, d)``. For each value
    interval each row picks its own best column set; summing the row optima
    overestimates the cut norm.
    """
    delta = a_alpha_masses - b_alpha_masses
    d = delta.shape[2]
    prefix = np.concatenate([np.zeros(delta.shape[:2] + (1,)), np.cumsum(delta, axis=2)], axis=2)
    iu, ju = np.triu_indices(d + 1, 1)
    D = prefix[:, :, ju] - prefix[:, :, iu]  # (m_r, m_c, I)
    pos = np.clip(D, 0, None).sum(axis=(0, 1))
    neg = np.clip(-D, 0, None).sum(axis=(0, 1))
    return float(max(pos.max(), neg.max()))


def displacement_masses(pi):
    """Cell masses of ``O - O^pi`` on ``M`` equal cells.

    ``O(x, y) = [x < y]``; ``O^pi`` moves block ``i`` to block ``pi[i]``
    keeping the order inside blocks. Off the diagonal a cell contributes
    ``([i < j] - [pi_i < pi_j]) / M**2``. On diagonal cells both functions
    equal ``[x < y]`` restricted to the block, half of its mass each, so the
    difference vanishes exactly.
    """
    pi = np.asarray(pi)
    M = len(pi)
    i = np.arange(M)
    D = (i[:, None] < i[None, :]).astype(float) - (pi[:, None] < pi[None, :]).astype(float)
    return D / (M * M)


def order_displacement(pi, exact_limit=EXACT_LIMIT, seed=0, certify=True):
    """Cut norm of ``O - O^pi`` for a block permutation ``pi``."""
    w = displacement_masses(pi)
    mode = "exact" if len(pi) <= exact_limit else "local_search"
    return cutnorm_masses(w, mode=mode, seed=seed, exact_limit=exact_limit, certify=certify)


def displacement_row_bound(pi):
    D = displacement_masses(pi)
    return float(max(np.clip(D, 0, None).sum(), np.clip(-D, 0, None).sum()))
