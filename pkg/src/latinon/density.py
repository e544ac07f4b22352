"""Pattern densities in Latin squares and step Latinons, exact and Monte Carlo.

Monte Carlo estimates are computed in fixed-size chunks, each with its own
seed derived from ``(seed, chunk index)``. The chunk layout does not depend
on the number of worker threads, so results are reproducible bit for bit.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb, factorial, log, sqrt

import numpy as np
from numba import njit

from . import exceptions as exc
from ._rng import rng_for
from .latin import LatinSquare
from .patterns import Pattern, all_pattern_arrays, lehmer_ranks
from .step import SemiLatinon

EXACT_BUDGET = 10 ** 10
STEP_BUDGET = 10 ** 9
CHUNK = 1 << 16
CONFIDENCE_LOG = log(200.0)  # two-sided 99%: ln(2 / 0.01)

__all__ = [
    "DensityReport",
    "hoeffding_radius",
    "density_exact",
    "density_mc",
    "step_density_exact",
    "step_density_mc",
    "density_vector",
    "pattern_counts",
    "step_density_all",
    "mc_counts",
]


@dataclass(frozen=True)
class DensityReport:
    pattern: Pattern
    value: float
    mode: str
    samples: int = 0
    radius: float = 0.0

    def as_row(self):
        return {
            "pattern_id": self.pattern.id,
            "value": repr(float(self.value)),
            "mode": self.mode,
            "samples": self.samples,
            "radius": repr(float(self.radius)),
        }


def hoeffding_radius(samples):
    """Half-width of a two-sided 99% Hoeffding interval for a mean of ``samples`` indicators."""
    return sqrt(CONFIDENCE_LOG / (2.0 * samples))


# ---------------------------------------------------------------- exact, squares


@njit(cache=True)
def _next_comb(c, n):
    k = c.shape[0]
    i = k - 1
    while i >= 0 and c[i] == n - k + i:
        i -= 1
    if i < 0:
        return False
    c[i] += 1
    for j in range(i + 1, k):
        c[j] = c[j - 1] + 1
    return True


@njit(cache=True)
def _count_kernel(cells, k, l, fact, counts):
    n = cells.shape[0]
    N = k * l
    v = np.empty(N, np.int64)
    rc = np.arange(k)
    ties = 0
    while True:
        cc = np.arange(l)
        while True:
            for s in range(k):
                for t in range(l):
                    v[s * l + t] = cells[rc[s], cc[t]]
            r = 0
            tied = False
            for i in range(N - 1):
                c = 0
                for j in range(i + 1, N):
                    if v[j] < v[i]:
                        c += 1
                    elif v[j] == v[i]:
                        tied = True
                r += c * fact[N - 1 - i]
            if tied:
                ties += 1
            else:
                counts[r] += 1
            if not _next_comb(cc, n):
                break
        if not _next_comb(rc, n):
            break
    return ties


def _check_square_budget(k, l, n):
    if k > n or l > n:
        raise exc.PatternTooLarge(f"a {k}x{l} pattern does not fit in an order-{n} square")
    N = k * l
    cost = comb(n, k) * comb(n, l) * N * (log(N) if N > 1 else 1.0)
    if cost > EXACT_BUDGET:
        raise exc.BudgetExceeded(f"exact count would cost ~{cost:.2e} > {EXACT_BUDGET:.0e}")


def pattern_counts(L, k, l):
    """Occurrence counts of every ``k x l`` pattern (indexed by rank) and the number of selections."""
    if not isinstance(L, LatinSquare):
        raise exc.ValidationError("expected a LatinSquare")
    n = L.order
    _check_square_budget(k, l, n)
    N = k * l
    if N > 12:
        raise exc.TooLarge("pattern too large to index")
    fact = np.array([factorial(i) for i in range(N)], dtype=np.int64)
    counts = np.zeros(factorial(N), dtype=np.int64)
    _count_kernel(np.ascontiguousarray(L.cells, dtype=np.int64), k, l, fact, counts)
    return counts, comb(n, k) * comb(n, l)


def density_exact(A, L):
    """Fraction of increasing row ``k``-tuples and column ``l``-tuples whose submatrix has pattern ``A``."""
    A = _as_pattern(A)
    counts, total = pattern_counts(L, A.k, A.l)
    return DensityReport(A, float(counts[A.rank] / total), "exact")


def _as_pattern(A):
    return A if isinstance(A, Pattern) else Pattern(A)


# ---------------------------------------------------------------- Monte Carlo


def _chunks(samples):
    full, rest = divmod(int(samples), CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _distinct_sorted(rng, n, k, size):
    """``size`` uniformly random increasing ``k``-subsets of ``range(n)``."""
    out = np.sort(rng.integers(0, n, size=(size, k)), axis=1)
    bad = np.flatnonzero(np.any(np.diff(out, axis=1) == 0, axis=1)) if k > 1 else np.array([], int)
    while bad.size:
        redo = np.sort(rng.integers(0, n, size=(bad.size, k)), axis=1)
        out[bad] = redo
        bad = bad[np.any(np.diff(redo, axis=1) == 0, axis=1)]
    return out


def _mc_square_chunk(cells, k, l, size, seed, index):
    rng = rng_for(seed, index)
    n = cells.shape[0]
    rows = _distinct_sorted(rng, n, k, size)
    cols = _distinct_sorted(rng, n, l, size)
    V = cells[rows[:, :, None], cols[:, None, :]].reshape(size, k * l)
    S = np.sort(V, axis=1)
    ok = np.all(np.diff(S, axis=1) != 0, axis=1) if k * l > 1 else np.ones(size, bool)
    return np.bincount(lehmer_ranks(V[ok]), minlength=factorial(k * l))


def _mc_step_chunk(W, k, l, size, seed, index):
    rng = rng_for(seed, index)
    N = k * l
    x = np.sort(rng.random((size, k)), axis=1)
    y = np.sort(rng.random((size, l)), axis=1)
    ci = W.row_parts.cell_of(x)
    cj = W.col_parts.cell_of(y)
    cum = np.cumsum(W.alpha, axis=2)
    cum[..., -1] = 1.0
    V = _sample_values(W, cum, ci, cj, rng)
    while True:
        S = np.sort(V, axis=1)
        tied = np.flatnonzero(np.any(np.diff(S, axis=1) == 0, axis=1)) if N > 1 else np.array([], int)
        if not tied.size:
            break
        V[tied] = _sample_values(W, cum, ci[tied], cj[tied], rng)
    return np.bincount(lehmer_ranks(V), minlength=factorial(N))


def _sample_values(W, cum, ci, cj, rng):
    size, k = ci.shape
    l = cj.shape[1]
    I = np.broadcast_to(ci[:, :, None], (size, k, l))
    J = np.broadcast_to(cj[:, None, :], (size, k, l))
    u = rng.random((size, k, l))
    c = cum[I, J]  # (size, k, l, d)
    q = np.minimum((c <= u[..., None]).sum(axis=-1), cum.shape[2] - 1)
    lo = W.value_parts.boundaries[q]
    z = lo + W.value_parts.lengths[q] * rng.random((size, k, l))
    return z.reshape(size, k * l)


def _run_chunks(fn, samples, threads):
    sizes = _chunks(samples)
    jobs = list(enumerate(sizes))
    if threads and threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: fn(job[1], job[0]), jobs))
    else:
        parts = [fn(size, i) for i, size in jobs]
    total = parts[0].copy()
    for p in parts[1:]:
        total += p
    return total


def mc_counts(x, k, l, samples, seed=0, threads=1):
    """Monte Carlo pattern counts (indexed by rank) over ``samples`` random selections."""
    if samples < 1:
        raise exc.ValidationError("samples must be positive")
    if isinstance(x, LatinSquare):
        if k > x.order or l > x.order:
            raise exc.PatternTooLarge(f"a {k}x{l} pattern does not fit in an order-{x.order} square")
        cells = np.asarray(x.cells)
        return _run_chunks(lambda size, i: _mc_square_chunk(cells, k, l, size, seed, i), samples, threads)
    return _run_chunks(lambda size, i: _mc_step_chunk(x, k, l, size, seed, i), samples, threads)


def density_mc(A, L, samples, seed=0, threads=1):
    """Monte Carlo estimate of the density of ``A`` with a 99% Hoeffding radius."""
    A = _as_pattern(A)
    counts = mc_counts(L, A.k, A.l, samples, seed, threads)
    return DensityReport(A, counts[A.rank] / samples, "monte_carlo", int(samples), hoeffding_radius(samples))


def step_density_mc(A, W, samples, seed=0, threads=1):
    A = _as_pattern(A)
    counts = mc_counts(W, A.k, A.l, samples, seed, threads)
    return DensityReport(A, counts[A.rank] / samples, "monte_carlo", int(samples), hoeffding_radius(samples))


# ---------------------------------------------------------------- exact, step Latinons


def _cell_assignments(lengths, k):
    """Nondecreasing cell sequences of length ``k`` with the probability that sorted uniforms follow them."""
    seqs = np.array(list(itertools.combinations_with_replacement(range(len(lengths)), k)), dtype=np.int64)
    w = np.full(len(seqs), float(factorial(k)))
    for i, s in enumerate(seqs):
        _, mult = np.unique(s, return_counts=True)
        for m in mult:
            w[i] /= factorial(int(m))
    w *= np.prod(np.asarray(lengths)[seqs], axis=1)
    return seqs, w


def _step_budget(W, k, l):
    m_r, m_c, d = W.alpha.shape
    cost = comb(m_r + k - 1, k) * comb(m_c + l - 1, l) * d ** (k * l)
    if cost > STEP_BUDGET:
        raise exc.BudgetExceeded(f"exact step density would cost ~{cost:.2e} > {STEP_BUDGET:.0e}")


def _chain_sum(H):
    """Sum over nondecreasing value-cell sequences of ``prod_r H[..., r, c_r] / prod_q count_q!``.

    ``H`` has shape ``(..., N, d)``. Dynamic programming over value cells:
    ``f[..., r]`` is the weight of all ways to place the first ``r`` ranks
    into the cells seen so far.
    """
    *lead, N, d = H.shape
    f = np.zeros(tuple(lead) + (N + 1,))
    f[..., 0] = 1.0
    inv_fact = [1.0 / factorial(j) for j in range(N + 1)]
    for q in range(d):
        g = f.copy()
        for r in range(N):
            prod = np.ones(tuple(lead))
            base = f[..., r]
            for j in range(1, N - r + 1):
                prod = prod * H[..., r + j - 1, q]
                g[..., r + j] += base * prod * inv_fact[j]
        f = g
    return f[..., N]


def step_density_all(W, k, l, patterns=None, block=4096):
    """Exact densities in the step (semi)Latinon ``W`` of every ``k x l`` pattern.

    ``patterns`` optionally restricts the computation to an int array of
    flattened patterns (rows are permutations of ``1..kl``).
    """
    if not isinstance(W, SemiLatinon):
        raise exc.ValidationError("expected a step Latinon")
    _step_budget(W, k, l)
    N = k * l
    P = all_pattern_arrays(k, l) if patterns is None else np.asarray(patterns, dtype=np.int64).reshape(-1, N)
    order = np.argsort(P, axis=1)  # order[p, r] = flat entry holding rank r + 1
    ra, wa = _cell_assignments(W.row_parts.lengths, k)
    cb, wb = _cell_assignments(W.col_parts.lengths, l)
    pairs_a = np.repeat(np.arange(len(ra)), len(cb))
    pairs_b = np.tile(np.arange(len(cb)), len(ra))
    weights = wa[pairs_a] * wb[pairs_b]
    alpha = W.alpha
    out = np.zeros(len(P))
    for start in range(0, len(pairs_a), block):
        sl = slice(start, start + block)
        A = ra[pairs_a[sl]]
        B = cb[pairs_b[sl]]
        G = alpha[A[:, :, None], B[:, None, :]].reshape(len(A), N, -1)  # (blk, N, d)
        H = G[:, order]  # (blk, P, N, d)
        out += weights[sl] @ _chain_sum(H)
    return out


def step_density_exact(A, W):
    """Exact density of pattern ``A`` in a step Latinon."""
    A = _as_pattern(A)
    val = step_density_all(W, A.k, A.l, patterns=A.entries.reshape(1, -1))[0]
    return DensityReport(A, float(val), "exact")


# ---------------------------------------------------------------- vectors


def density_vector(x, k, l, mode="exact", samples=10 ** 5, seed=0, threads=1):
    """Density reports for every pattern of shape ``k x l``, in rank order."""
    pats = all_pattern_arrays(k, l)
    if mode == "exact":
        if k * l > 6:
            raise exc.BudgetExceeded("exact density vectors are limited to k*l <= 6")
        if isinstance(x, LatinSquare):
            counts, total = pattern_counts(x, k, l)
            vals = counts / total
        else:
            vals = step_density_all(x, k, l)
        return [DensityReport(Pattern(p.reshape(k, l)), float(v), "exact") for p, v in zip(pats, vals)]
    if mode in ("monte_carlo", "mc"):
        counts = mc_counts(x, k, l, samples, seed, threads)
        rad = hoeffding_radius(samples)
        return [
            DensityReport(Pattern(p.reshape(k, l)), float(c / samples), "monte_carlo", int(samples), rad)
            for p, c in zip(pats, counts)
        ]
    raise exc.ValidationError(f"unknown mode {mode!r}")
