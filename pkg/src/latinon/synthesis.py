"""Finite Latin squares that follow a prescribed step Latinon, and step approximation.

A step Latinon and an order ``n`` give integer quotas: how many cells of
row block ``i`` and column block ``j`` should hold a value of block ``k``.
Once the quotas have exact two-way margins they form an outline square,
and an outline square is always the block reduction of a Latin square.
That square is found by splitting blocks into single rows, single columns
and single values, each split a balanced rounding or a perfect matching.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_array, csr_array, hstack, identity
from scipy.sparse.csgraph import maximum_bipartite_matching, maximum_flow

from . import exceptions as exc
from ._rng import rng_for
from .cutnorm import EXACT_LIMIT, cutnorm_distval
from .latin import LatinSquare
from .regularity import atoms_of, on_atoms, weak_regularity
from .step import (MAX_TENSOR, IntervalPartition, StepBigraphon, StepLatinon, anticompress, compress, restep,
                   validate_latinon)

__all__ = ["QuotaPlan", "plan_quotas", "synthesize", "SynthesisResult", "parity_realize", "parity_latinon",
           "step_approximate", "ApproximationResult", "largest_remainder", "compression_depth",
           "outline", "block_counts"]


def largest_remainder(weights, total):
    """Integers proportional to ``weights`` summing to ``total`` (ties go to the lower index)."""
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    if s <= 0:
        out = np.zeros(len(w), dtype=np.int64)
        out[0] = total
        return out
    exact = w * (total / s)
    base = np.floor(exact + 1e-12).astype(np.int64)
    short = int(total - base.sum())
    if short > 0:
        rem = exact - base
        order = np.lexsort((np.arange(len(w)), -rem))
        base[order[:short]] += 1
    elif short < 0:
        rem = exact - base
        order = np.lexsort((np.arange(len(w)), rem))
        base[order[:-short]] -= 1
    return base


@dataclass
class QuotaPlan:
    n: int
    row_sizes: np.ndarray
    col_sizes: np.ndarray
    value_sizes: np.ndarray
    quotas: np.ndarray  # (m_r, m_c, d) integers
    rounded: np.ndarray | None = None  # per-cell largest remainder, before margin repair

    @property
    def row_block(self):
        return np.repeat(np.arange(len(self.row_sizes)), self.row_sizes)

    @property
    def col_block(self):
        return np.repeat(np.arange(len(self.col_sizes)), self.col_sizes)

    @property
    def value_block(self):
        return np.repeat(np.arange(len(self.value_sizes)), self.value_sizes)

    def slack(self):
        """Largest gap between quota marginals and the block products they should match."""
        row = np.abs(self.quotas.sum(axis=1) - np.outer(self.row_sizes, self.value_sizes)).max()
        col = np.abs(self.quotas.sum(axis=0) - np.outer(self.col_sizes, self.value_sizes)).max()
        return int(max(row, col))

    def to_dict(self):
        return {"n": self.n, "row_sizes": self.row_sizes.tolist(), "col_sizes": self.col_sizes.tolist(),
                "value_sizes": self.value_sizes.tolist(), "quotas": self.quotas.tolist()}


def plan_quotas(W, n):
    """Integer block-triple targets for an order-``n`` square following ``W``.

    Block sizes and each cell's split over value blocks are largest-remainder
    roundings. Rounding the block sizes shifts the row-value and
    column-value sums by a few units per block; :func:`outline` then finds
    the nearest tensor on which those sums are exact too, so ``slack() == 0``. The
    unrepaired rounding is kept in ``rounded``.
    """
    n = int(n)
    m_r, m_c, d = W.alpha.shape
    if n < max(m_r, m_c, d):
        raise exc.TooFewRows(f"n = {n} is smaller than the number of cells")
    R = largest_remainder(W.row_parts.lengths, n)
    C = largest_remainder(W.col_parts.lengths, n)
    V = largest_remainder(W.value_parts.lengths, n)
    if min(R.min(), C.min(), V.min()) == 0:
        raise exc.TooFewRows(f"n = {n} leaves an empty block")
    T = np.zeros((m_r, m_c, d), dtype=np.int64)
    for i in range(m_r):
        for j in range(m_c):
            T[i, j] = largest_remainder(W.alpha[i, j], int(R[i] * C[j]))
    plan = QuotaPlan(n, R, C, V, T, T.copy())
    plan.quotas = outline(plan)
    return plan


@dataclass
class SynthesisResult:
    square: LatinSquare
    deviation: float
    achieved: np.ndarray
    plan: QuotaPlan
    restart: int
    deviations: list = field(default_factory=list)

    def report(self):
        dev = np.abs(self.achieved - self.plan.quotas)
        return {
            "n": self.plan.n,
            "max_relative_deviation": self.deviation,
            "max_absolute_deviation": int(dev.max()),
            "restart": self.restart,
            "restart_deviations": self.deviations,
            "quotas": self.plan.quotas.tolist(),
            "achieved": self.achieved.tolist(),
        }


def _margin_matrix(shape):
    """Sparse 0/1 matrix summing a C-ordered ``shape`` tensor onto its three two-way margins."""
    p, q, d = shape
    idx = np.arange(p * q * d).reshape(shape)
    i, j, k = np.indices(shape)
    rows = np.concatenate([(i * q + j).ravel(), p * q + (i * d + k).ravel(), p * q + p * d + (j * d + k).ravel()])
    cols = np.tile(idx.ravel(), 3)
    return coo_array((np.ones(len(rows)), (rows, cols)), shape=(p * q + p * d + q * d, p * q * d))


def outline(plan):
    """Nearest integer tensor to the rounded quotas whose three two-way margins are all exact.

    Such a tensor is the block reduction of some Latin square, and
    :func:`synthesize` realises it exactly. "Nearest" is in L1; the problem
    is a small integer program, solved with :func:`scipy.optimize.milp`.
    """
    target = (plan.quotas if plan.rounded is None else plan.rounded).astype(np.int64)
    R, C, V = plan.row_sizes, plan.col_sizes, plan.value_sizes
    g = target.sum(axis=1) - np.outer(R, V)
    h = target.sum(axis=0) - np.outer(C, V)
    if not (np.any(g) or np.any(h)):
        return target.copy()
    N = target.size
    A = _margin_matrix(target.shape)
    rhs = np.concatenate([np.outer(R, C).ravel(), np.outer(R, V).ravel(), np.outer(C, V).ravel()]).astype(float)
    # variables: T (N entries) then u >= |T - target| (N entries)
    eye = identity(N, format="csr")
    t = target.ravel().astype(float)
    cons = [
        LinearConstraint(hstack([A, csr_array(A.shape)]), rhs, rhs),
        LinearConstraint(hstack([eye, -eye]), -np.inf, t),
        LinearConstraint(hstack([-eye, -eye]), -np.inf, -t),
    ]
    cost = np.concatenate([np.zeros(N), np.ones(N)])
    res = milp(cost, constraints=cons, integrality=np.concatenate([np.ones(N), np.zeros(N)]),
               bounds=Bounds(0, np.inf))
    if res.x is None:
        raise exc.ValidationError(f"quota tensor cannot be balanced into an outline square ({res.message})")
    return np.rint(res.x[:N]).astype(np.int64).reshape(target.shape)


def _round_share(B, t, row_sums, col_sums, rng):
    """An integer matrix between ``floor(B / t)`` and ``ceil(B / t)`` with the given line sums.

    Exists because ``B / t`` itself has these line sums; found by a max flow
    on the fractional entries, with rows and columns shuffled by ``rng``.
    """
    base = B // t
    frac = (B % t) != 0
    need_r = row_sums - base.sum(axis=1)
    need_c = col_sums - base.sum(axis=0)
    if need_r.sum() == 0:
        return base
    p, q = B.shape
    pr = rng.permutation(p)
    pc = rng.permutation(q)
    src, snk = p + q, p + q + 1
    ii, jj = np.nonzero(frac[np.ix_(pr, pc)])
    heads = np.concatenate([np.full(p, src), ii, p + np.arange(q)])
    tails = np.concatenate([np.arange(p), p + jj, np.full(q, snk)])
    cap = np.concatenate([need_r[pr], np.ones(len(ii), dtype=np.int64), need_c[pc]]).astype(np.int32)
    graph = csr_array((cap, (heads, tails)), shape=(p + q + 2, p + q + 2))
    res = maximum_flow(graph, src, snk)
    if res.flow_value != need_r.sum():
        raise AssertionError("balanced rounding does not exist")
    flow = res.flow.tocsr()
    extra = np.zeros_like(B)
    vals = np.asarray(flow[ii, p + jj]).ravel()
    extra[pr[ii], pc[jj]] = vals > 0
    return base + extra


def _realize(T, plan, rng):
    """Latin square whose block-triple counts are exactly ``T`` (an outline)."""
    n = plan.n
    R, C, V = plan.row_sizes, plan.col_sizes, plan.value_sizes
    rb, cb = plan.row_block, plan.col_block
    # rows: share each row block's counts out one row at a time
    per_row = np.zeros((n, len(C), len(V)), dtype=np.int64)
    x = 0
    for i in range(len(R)):
        B = T[i].copy()
        for t in range(R[i], 0, -1):
            N = _round_share(B, t, C, V, rng)
            per_row[x] = N
            B -= N
            x += 1
    # columns: within each column block, one column at a time
    block_of_cell = np.zeros((n, n), dtype=np.int64)
    c = 0
    ones = np.ones(n, dtype=np.int64)
    for j in range(len(C)):
        B = per_row[:, j, :].copy()
        for t in range(C[j], 0, -1):
            N = _round_share(B, t, ones, V, rng)
            block_of_cell[:, c] = np.argmax(N, axis=1)
            B -= N
            c += 1
    # values: every value block is a regular bipartite graph, peel perfect matchings
    cells = np.zeros((n, n), dtype=np.int64)
    start = np.concatenate([[0], np.cumsum(V)])
    for k in range(len(V)):
        adj = block_of_cell == k
        for v in range(start[k], start[k + 1]):
            perm = rng.permutation(n)
            g = csr_array(adj[:, perm].astype(np.int8))
            match = maximum_bipartite_matching(g, perm_type="column")
            if np.any(match < 0):
                raise AssertionError("value block is not a regular bipartite graph")
            cols = perm[match]
            cells[np.arange(n), cols] = v + 1
            adj[np.arange(n), cols] = False
    # shuffle inside blocks: keeps the Latin property and every block count,
    # and removes the regular structure the splitting leaves behind
    perm_r = _within_blocks(R, rng)
    perm_c = _within_blocks(C, rng)
    relabel = _within_blocks(V, rng)
    return relabel[cells[np.ix_(perm_r, perm_c)] - 1] + 1


def _within_blocks(sizes, rng):
    start = np.concatenate([[0], np.cumsum(sizes)])
    return np.concatenate([start[b] + rng.permutation(sizes[b]) for b in range(len(sizes))])


def block_counts(cells, plan):
    """Block-triple counts of a square under the blocks of ``plan``."""
    A = np.zeros_like(plan.quotas)
    rb, cb, vb = plan.row_block, plan.col_block, plan.value_block
    cells = np.asarray(cells)
    np.add.at(A, (rb[:, None], cb[None, :], vb[cells - 1]), 1)
    return A


def synthesize(plan, seed=0, restarts=1):
    """Build a Latin square of order ``plan.n`` whose block-triple counts track the quotas.

    The quotas are first balanced into an outline (:func:`outline`); the
    outline is then realised exactly by detaching rows, then columns, then
    single values. Each restart reshuffles the flow and matching problems
    with its own derived seed; the square with the smallest maximum relative
    deviation ``|achieved - T| / max(T, 1)`` is kept (the first on ties).
    """
    T = plan.quotas if plan.slack() == 0 else outline(plan)
    best = None
    devs = []
    for r in range(max(1, int(restarts))):
        cells = _realize(T, plan, rng_for(seed, r))
        achieved = block_counts(cells, plan)
        dev = float((np.abs(achieved - plan.quotas) / np.maximum(plan.quotas, 1)).max())
        devs.append(dev)
        if best is None or dev < best[1]:
            best = (cells, dev, achieved, r)
    cells, dev, achieved, r = best
    square = LatinSquare(cells)  # full validation: the construction must be Latin
    return SynthesisResult(square, dev, achieved, plan, r, devs)


def parity_latinon(m):
    """Cell averages of ``(x, y) -> (point mass at x + y + point mass at -x - y) / 2`` on an ``m`` grid."""
    alpha = np.zeros((m, m, m))
    i = np.arange(m)
    s = i[:, None] + i[None, :]
    ii, jj = np.broadcast_arrays(i[:, None], i[None, :])
    for cell in (s % m, (s + 1) % m, (-s - 1) % m, (-s - 2) % m):
        np.add.at(alpha, (ii, jj, cell), 0.25)
    p = IntervalPartition.uniform(m)
    return StepLatinon(p, p, p, alpha)


def parity_realize(n, m=4, seed=0, restarts=1):
    """A deterministic Latin square behaving like the random half-sum, half-difference square."""
    if n % 2:
        raise exc.OddOrder(f"n must be even, got {n}")
    if n % m:
        raise exc.ValidationError(f"m = {m} must divide n = {n}")
    return synthesize(plan_quotas(parity_latinon(m), n), seed=seed, restarts=restarts)


@dataclass
class ApproximationResult:
    latinon: StepLatinon
    depth: int
    compression_error: float
    regularity_error: float
    n_classes: int

    @property
    def budget(self):
        return self.compression_error + self.regularity_error


def _distval_upper(a, b, exact_limit=EXACT_LIMIT):
    """Certified upper bound on the distribution-valued cut norm of ``a - b`` (common partitions)."""
    return float(cutnorm_distval(a, b, exact_limit=exact_limit).upper)


def _value_union(value_parts, d):
    b = np.union1d(value_parts.boundaries, IntervalPartition.dyadic(d).boundaries)
    keep = np.concatenate([[True], np.diff(b) > 1e-15])
    b = b[keep]
    b[-1] = 1.0
    return IntervalPartition.from_boundaries(b)


def compression_depth(eps):
    """Smallest ``d >= 1`` with ``1 / 2**(d - 2) < eps / 2``."""
    d = 1
    while 1.0 / 2.0 ** (d - 2) >= eps / 2:
        d += 1
    return d


def step_approximate(W, eps, r=None, seed=0, exact_limit=EXACT_LIMIT):
    """Approximate ``W`` by a step Latinon with dyadic value cells.

    Compress to the depth given by :func:`compression_depth`, refine W's own
    cells with a weak regularity partition of the compression tuple, average each
    component over the resulting product classes and rebuild. Averaging over
    product classes keeps both marginal conditions; the output is validated
    again regardless. The reported budget is the certified cut norm of the
    compression step plus that of the regularisation step, and
    ``BudgetExceeded`` is raised when it is not below ``eps``.
    """
    if eps <= 0:
        raise exc.ValidationError("eps must be positive")
    validate_latinon(W)
    d = compression_depth(eps)
    atoms = atoms_of(W.row_parts, W.col_parts)
    if 2 ** d * len(atoms) ** 2 > MAX_TENSOR:
        raise exc.TooLarge(f"eps = {eps} needs depth {d}, beyond {MAX_TENSOR} tensor entries")
    dyadic = IntervalPartition.dyadic(d)
    comp = anticompress([StepBigraphon(atoms, atoms, on_atoms(b, atoms)) for b in compress(W, d)])
    fine = _value_union(W.value_parts, d)
    compression_error = _distval_upper(restep(W, atoms, atoms, fine), restep(comp, atoms, atoms, fine),
                                       exact_limit)
    tuple_ = [StepBigraphon(atoms, atoms, comp.alpha[:, :, s]) for s in range(2 ** d)]
    # the prepartition is W's own cell structure, so the output never mixes
    # rows (or columns) that W keeps apart
    reg = weak_regularity(tuple_, r=r if r is not None else 2, prepartition=atoms,
                          threshold=eps / 2 ** (d + 1), seed=seed, exact_limit=exact_limit)
    alpha = np.stack([s.values for s in reg.steppings], axis=2)
    out = validate_latinon(StepLatinon(atoms, atoms, dyadic, alpha))
    regularity_error = _distval_upper(comp, out, exact_limit)
    res = ApproximationResult(out, d, compression_error, regularity_error, reg.n_classes)
    if res.budget >= eps:
        raise exc.BudgetExceeded(f"achieved budget {res.budget:.4g} is not below eps = {eps}")
    return res
