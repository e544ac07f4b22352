"""Step Latinons, semilatinons and step bigraphons on interval partitions of [0, 1].

A step Latinon is described by three interval partitions (rows, columns,
values) and a tensor ``alpha[i, j, k]``: the probability that the value at a
point of row cell ``i`` and column cell ``j`` lands in value cell ``k``.
Inside a value cell the distribution is uniform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exceptions as exc
from .latin import LatinSquare, validate

SUM_TOL = 1e-12
MARGINAL_TOL = 1e-9
MAX_TENSOR = 2 ** 24  # 256**3: one full order-256 representation

__all__ = [
    "IntervalPartition",
    "SemiLatinon",
    "StepLatinon",
    "StepBigraphon",
    "validate_latinon",
    "uniform_latinon",
    "represent",
    "standard_cyclic_step",
    "compress",
    "anticompress",
    "refine_common",
    "entropy",
    "overlap_matrix",
    "random_step_latinon",
]


class IntervalPartition:
    """Consecutive intervals of [0, 1] given by their lengths.

    Intervals are left-closed and right-open, with the last one closed.
    """

    __slots__ = ("lengths", "boundaries")

    def __init__(self, lengths):
        lengths = np.array(lengths, dtype=float).ravel()
        if lengths.size == 0:
            raise exc.PartitionError("a partition needs at least one cell")
        if np.any(~np.isfinite(lengths)) or np.any(lengths <= 0):
            raise exc.PartitionError("cell lengths must be positive")
        total = lengths.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise exc.PartitionError(f"cell lengths sum to {total!r}, not 1")
        b = np.concatenate([[0.0], np.cumsum(lengths)])
        b[-1] = 1.0
        lengths.flags.writeable = False
        b.flags.writeable = False
        self.lengths = lengths
        self.boundaries = b

    @classmethod
    def uniform(cls, m):
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def dyadic(cls, d):
        return cls.uniform(2 ** d)

    @classmethod
    def from_boundaries(cls, b):
        b = np.asarray(b, dtype=float)
        p = cls.__new__(cls)
        lengths = np.diff(b)
        if b[0] != 0.0 or b[-1] != 1.0 or np.any(lengths <= 0):
            raise exc.PartitionError("boundaries must increase strictly from 0 to 1")
        lengths.flags.writeable = False
        b = b.copy()
        b.flags.writeable = False
        p.lengths = lengths
        p.boundaries = b
        return p

    def __len__(self):
        return self.lengths.size

    def __eq__(self, other):
        return isinstance(other, IntervalPartition) and np.array_equal(self.boundaries, other.boundaries)

    def __hash__(self):
        return hash(self.boundaries.tobytes())

    def __repr__(self):
        return f"IntervalPartition({len(self)} cells)"

    def cell_of(self, x):
        """Index of the cell containing each point of ``x``."""
        idx = np.searchsorted(self.boundaries, x, side="right") - 1
        return np.clip(idx, 0, len(self) - 1)

    def is_uniform(self):
        return bool(np.all(np.abs(self.lengths - 1.0 / len(self)) < 1e-15))


def overlap_matrix(p, q):
    """``O[a, b] = |p_a ∩ q_b|`` for two partitions of [0, 1]."""
    lo = np.maximum(p.boundaries[:-1, None], q.boundaries[None, :-1])
    hi = np.minimum(p.boundaries[1:, None], q.boundaries[None, 1:])
    return np.clip(hi - lo, 0.0, None)


def _as_partition(p):
    return p if isinstance(p, IntervalPartition) else IntervalPartition(p)


class SemiLatinon:
    """Step data ``(row_parts, col_parts, value_parts, alpha)`` without marginal conditions.

    Each ``alpha[i, j, :]`` is a probability vector over the value cells.
    """

    def __init__(self, row_parts, col_parts, value_parts, alpha):
        self.row_parts = _as_partition(row_parts)
        self.col_parts = _as_partition(col_parts)
        self.value_parts = _as_partition(value_parts)
        shape = (len(self.row_parts), len(self.col_parts), len(self.value_parts))
        if int(np.prod(shape)) > MAX_TENSOR:
            raise exc.TooLarge(f"alpha tensor of shape {shape} exceeds {MAX_TENSOR} entries")
        alpha = np.array(alpha, dtype=float)
        if alpha.shape != shape:
            raise exc.PartitionMismatch(f"alpha has shape {alpha.shape}, partitions imply {shape}")
        bad = np.argwhere((alpha < -SUM_TOL) | (alpha > 1 + SUM_TOL) | ~np.isfinite(alpha))
        if len(bad):
            i, j, k = bad[0]
            raise exc.ValidationError(f"alpha[{i}, {j}, {k}] = {alpha[i, j, k]!r} outside [0, 1]")
        np.clip(alpha, 0.0, 1.0, out=alpha)
        sums = alpha.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > SUM_TOL * max(1, shape[2]))
        if len(bad):
            i, j = bad[0]
            raise exc.SumNotOne(int(i), int(j), float(sums[i, j]))
        alpha.flags.writeable = False
        self.alpha = alpha

    @property
    def shape(self):
        return self.alpha.shape

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape})"

    def __eq__(self, other):
        return (
            isinstance(other, SemiLatinon)
            and self.row_parts == other.row_parts
            and self.col_parts == other.col_parts
            and self.value_parts == other.value_parts
            and np.array_equal(self.alpha, other.alpha)
        )

    __hash__ = None

    def marginal_residuals(self):
        """Residuals of the row and column permuton conditions, shapes ``(m_r, d)`` and ``(m_c, d)``."""
        q = self.value_parts.lengths
        row = np.einsum("ijk,j->ik", self.alpha, self.col_parts.lengths) - q[None, :]
        col = np.einsum("ijk,i->jk", self.alpha, self.row_parts.lengths) - q[None, :]
        return row, col

    def masses(self):
        """Cell masses ``len(P_i) len(C_j) alpha[i, j, k]``."""
        return self.alpha * np.multiply.outer(self.row_parts.lengths, self.col_parts.lengths)[:, :, None]


class StepLatinon(SemiLatinon):
    """A semilatinon whose row and column slices have uniform value marginals."""

    def __init__(self, row_parts, col_parts, value_parts, alpha):
        super().__init__(row_parts, col_parts, value_parts, alpha)
        row, col = self.marginal_residuals()
        _raise_marginal(row, col)


def _raise_marginal(row, col):
    bad = np.argwhere(np.abs(row) > MARGINAL_TOL)
    if len(bad):
        i, k = bad[0]
        raise exc.RowMarginalViolation(int(i), int(k), float(row[i, k]))
    bad = np.argwhere(np.abs(col) > MARGINAL_TOL)
    if len(bad):
        j, k = bad[0]
        raise exc.ColMarginalViolation(int(j), int(k), float(col[j, k]))


def validate_latinon(candidate):
    """Check the permuton conditions on a semilatinon and return a :class:`StepLatinon`."""
    if isinstance(candidate, StepLatinon):
        return candidate
    row, col = candidate.marginal_residuals()
    _raise_marginal(row, col)
    out = StepLatinon.__new__(StepLatinon)
    out.__dict__.update(candidate.__dict__)
    return out


def _semi_or_latinon(row_parts, col_parts, value_parts, alpha):
    semi = SemiLatinon(row_parts, col_parts, value_parts, alpha)
    try:
        return validate_latinon(semi)
    except (exc.RowMarginalViolation, exc.ColMarginalViolation):
        return semi


class StepBigraphon:
    """A real-valued step function on a grid of interval cells."""

    def __init__(self, row_parts, col_parts, values):
        self.row_parts = _as_partition(row_parts)
        self.col_parts = _as_partition(col_parts)
        values = np.array(values, dtype=float)
        if values.shape != (len(self.row_parts), len(self.col_parts)):
            raise exc.PartitionMismatch(
                f"values have shape {values.shape}, partitions imply "
                f"{(len(self.row_parts), len(self.col_parts))}"
            )
        values.flags.writeable = False
        self.values = values

    @classmethod
    def uniform_grid(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(IntervalPartition.uniform(values.shape[0]), IntervalPartition.uniform(values.shape[1]), values)

    def cell_masses(self):
        return self.values * np.multiply.outer(self.row_parts.lengths, self.col_parts.lengths)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return StepBigraphon(self.row_parts, self.col_parts, self.values - other.values)

    def __add__(self, other):
        _check_same_grid(self, other)
        return StepBigraphon(self.row_parts, self.col_parts, self.values + other.values)

    def __neg__(self):
        return StepBigraphon(self.row_parts, self.col_parts, -self.values)

    def __call__(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return self.values[self.row_parts.cell_of(x)[..., :, None], self.col_parts.cell_of(y)[..., None, :]]

    def __repr__(self):
        return f"StepBigraphon(shape={self.values.shape})"


def _check_same_grid(a, b):
    if a.row_parts != b.row_parts or a.col_parts != b.col_parts:
        raise exc.PartitionMismatch("step functions live on different grids")


def uniform_latinon():
    """The Latinon whose value at every point is the uniform distribution."""
    return StepLatinon([1.0], [1.0], [1.0], [[[1.0]]])


def represent(L):
    """Step Latinon of a Latin square: ``n`` equal cells, point mass on the value's cell."""
    L = validate(L) if not isinstance(L, LatinSquare) else L
    n = L.order
    if n ** 3 > MAX_TENSOR:
        raise exc.TooLarge(f"order {n} gives a tensor beyond {MAX_TENSOR} entries")
    alpha = np.zeros((n, n, n))
    i = np.arange(n)
    alpha[i[:, None], i[None, :], L.cells - 1] = 1.0
    p = IntervalPartition.uniform(n)
    out = StepLatinon.__new__(StepLatinon)
    SemiLatinon.__init__(out, p, p, p, alpha)
    return out


def standard_cyclic_step(m):
    """Cell averages of the Latinon ``(x, y) -> point mass at x + y mod 1`` on an ``m`` grid.

    On cell ``(i, j)`` the sum ``x + y`` has a tent density on
    ``[(i+j)/m, (i+j+2)/m)``, so half the mass falls into value cell
    ``i+j mod m`` and half into ``i+j+1 mod m``.
    """
    if m < 1:
        raise exc.ValidationError("m must be positive")
    alpha = np.zeros((m, m, m))
    i = np.arange(m)
    s = i[:, None] + i[None, :]
    ii, jj = np.broadcast_arrays(i[:, None], i[None, :])
    np.add.at(alpha, (ii, jj, s % m), 0.5)
    np.add.at(alpha, (ii, jj, (s + 1) % m), 0.5)
    p = IntervalPartition.uniform(m)
    return StepLatinon(p, p, p, alpha)


def compress(W, depth):
    """The ``2**depth`` step bigraphons recording the mass on each dyadic value interval."""
    if depth < 1:
        raise exc.ValidationError("depth must be at least 1")
    D = IntervalPartition.dyadic(depth)
    frac = overlap_matrix(W.value_parts, D) / W.value_parts.lengths[:, None]
    vals = np.einsum("ijk,ks->sij", W.alpha, frac)
    return [StepBigraphon(W.row_parts, W.col_parts, v) for v in vals]


def anticompress(parts):
    """Rebuild a (semi)Latinon on dyadic value cells from its compression."""
    parts = list(parts)
    s = len(parts)
    depth = int(round(np.log2(s))) if s else -1
    if s < 2 or 2 ** depth != s:
        raise exc.ValidationError("need 2**d step bigraphons with d >= 1")
    first = parts[0]
    for p in parts[1:]:
        _check_same_grid(first, p)
    alpha = np.stack([p.values for p in parts], axis=2)
    sums = alpha.sum(axis=2)
    bad = np.argwhere(np.abs(sums - 1.0) > SUM_TOL * s)
    if len(bad):
        i, j = bad[0]
        raise exc.SumNotOne(int(i), int(j), float(sums[i, j]))
    return _semi_or_latinon(first.row_parts, first.col_parts, IntervalPartition.dyadic(depth), alpha)


@dataclass(frozen=True)
class Refinement:
    """Two step objects re-expressed on a shared grid.

    ``slack_a`` and ``slack_b`` bound the cut distance between each input and
    its re-expression (see :func:`_restep_slack`).
    """

    a: SemiLatinon
    b: SemiLatinon
    slack_a: float
    slack_b: float

    @property
    def slack(self):
        return self.slack_a + self.slack_b

    def __iter__(self):
        return iter((self.a, self.b))


def _common_values(p, q):
    b = np.union1d(p.boundaries, q.boundaries)
    # merge boundaries that differ only by rounding noise
    keep = np.concatenate([[True], np.diff(b) > 1e-14])
    b = b[keep]
    b[-1] = 1.0
    return IntervalPartition.from_boundaries(b)


def _mixed_measure(grid, part):
    """Total length of grid cells that meet more than one cell of ``part``."""
    O = overlap_matrix(grid, part)
    hits = (O > 1e-15 * grid.lengths[:, None]).sum(axis=1)
    return float(grid.lengths[hits > 1].sum())


def restep(W, rows, cols, values):
    """Average ``W`` onto new row/column partitions and split its value cells onto ``values``.

    Averaging keeps both permuton conditions, so a Latinon stays a Latinon.
    ``values`` must refine ``W.value_parts``.
    """
    Or = overlap_matrix(rows, W.row_parts) / rows.lengths[:, None]
    Oc = overlap_matrix(cols, W.col_parts) / cols.lengths[:, None]
    Ov = overlap_matrix(W.value_parts, values) / W.value_parts.lengths[:, None]
    alpha = np.einsum("Ii,Jj,ijk,kK->IJK", Or, Oc, W.alpha, Ov, optimize=True)
    cls = StepLatinon if isinstance(W, StepLatinon) else SemiLatinon
    out = cls.__new__(cls)
    SemiLatinon.__init__(out, rows, cols, values, np.clip(alpha, 0.0, 1.0))
    return out


def refine_common(a, b, M=None):
    """Re-express ``a`` and ``b`` on ``M`` equal row/column cells and common value cells.

    With ``M=None`` both go onto the coarsest common refinement of their own
    cells instead, which loses nothing (slack 0).
    """
    values = _common_values(a.value_parts, b.value_parts)
    if M is None:
        rows = _common_values(a.row_parts, b.row_parts)
        cols = _common_values(a.col_parts, b.col_parts)
        return Refinement(restep(a, rows, cols, values), restep(b, rows, cols, values), 0.0, 0.0)
    if M < 1:
        raise exc.ValidationError("M must be positive")
    grid = IntervalPartition.uniform(M)
    ra = restep(a, grid, grid, values)
    rb = restep(b, grid, grid, values)
    return Refinement(ra, rb, _restep_slack(a, grid), _restep_slack(b, grid))


def _restep_slack(W, grid):
    """Bound on the distribution-valued cut norm between ``W`` and its average on ``grid``.

    The two agree outside the rows and columns whose new cell straddles an
    old boundary, so the difference lives on a region of area
    ``r + c - r c``. Two Latinons never differ by more than 1/4: for fixed
    ``S, T`` the mass of ``V`` lies in ``[|V| max(0, |S| + |T| - 1), |V| min(|S|, |T|)]``
    and the difference on ``V`` equals minus the difference on its complement.
    """
    r = _mixed_measure(grid, W.row_parts)
    c = _mixed_measure(grid, W.col_parts)
    area = r + c - r * c
    return min(area, 0.25) if isinstance(W, StepLatinon) else area


def entropy(W):
    """``sum len(P_i) len(C_j) alpha log(alpha / len(Q_k))`` in nats, with ``0 log 0 = 0``."""
    a = W.alpha
    q = W.value_parts.lengths
    w = np.multiply.outer(W.row_parts.lengths, W.col_parts.lengths)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(a > 0, a * np.log(np.where(a > 0, a, 1.0) / q[None, None, :]), 0.0)
    return float(np.einsum("ij,ijk->", w, terms))


def _random_partition(m, rng, spread):
    if spread <= 0:
        return IntervalPartition.uniform(m)
    w = rng.uniform(1.0, 1.0 + spread, size=m)
    lengths = w / w.sum()
    lengths[-1] = 1.0 - lengths[:-1].sum()
    return IntervalPartition(lengths)


def random_step_latinon(m_r, m_c, d, rng, spread=1.0, concentration=1.0, iters=5000):
    """A random valid step Latinon.

    Cell masses are drawn with random log-weights and then balanced by
    iterative proportional fitting against the three two-way margins, which
    are exactly the Latinon conditions. ``spread`` controls how unequal the
    partitions are (0 gives equal cells); ``concentration`` scales the
    log-weights and so how far ``alpha`` is from uniform.
    """
    rng = np.random.default_rng(rng)
    P = _random_partition(m_r, rng, spread)
    C = _random_partition(m_c, rng, spread)
    Q = _random_partition(d, rng, spread)
    p, c, q = P.lengths, C.lengths, Q.lengths
    mu = np.exp(concentration * rng.standard_normal((m_r, m_c, d)))
    t_ij = np.multiply.outer(p, c)
    t_ik = np.multiply.outer(p, q)
    t_jk = np.multiply.outer(c, q)
    for _ in range(iters):
        mu *= (t_ik / mu.sum(axis=1))[:, None, :]
        mu *= (t_jk / mu.sum(axis=0))[None, :, :]
        mu *= (t_ij / mu.sum(axis=2))[:, :, None]
        err = max(np.abs(mu.sum(axis=1) - t_ik).max(), np.abs(mu.sum(axis=0) - t_jk).max())
        if err < 1e-15:
            break
    alpha = mu / t_ij[:, :, None]
    alpha /= alpha.sum(axis=2, keepdims=True)
    return StepLatinon(P, C, Q, alpha)
