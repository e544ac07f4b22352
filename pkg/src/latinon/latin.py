"""Finite Latin squares: representation, validation, transforms and generators.

Cells are stored 1-based (values ``1..n``). Generators that follow 0-based
closed formulas shift by one on the way out.
"""
from __future__ import annotations

import numpy as np

from . import exceptions as exc
from ._jm import jm_run
from ._rng import rng_for

__all__ = [
    "LatinSquare",
    "validate",
    "gen_cyclic",
    "gen_parity_H",
    "gen_swap_pair",
    "gen_very_local",
    "transpose",
    "column_value_swap",
    "gen_random_uniform",
    "enumerate_latin_squares",
]


class LatinSquare:
    """An order-``n`` Latin square with 1-based values.

    Instances are immutable; ``cells`` is a read-only ``(n, n)`` int array.
    Construct through :func:`validate` (or ``LatinSquare(cells)``, which
    validates as well).
    """

    __slots__ = ("cells",)

    def __init__(self, cells, _checked=False):
        arr = np.array(cells, dtype=np.int64, copy=True)
        if not _checked:
            _check_cells(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "cells", arr)

    def __setattr__(self, name, value):
        raise AttributeError("LatinSquare is immutable")

    @property
    def order(self):
        return self.cells.shape[0]

    n = order

    def __eq__(self, other):
        return isinstance(other, LatinSquare) and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.order, self.cells.tobytes()))

    def __repr__(self):
        return f"LatinSquare(order={self.order})"

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.cells, dtype=dtype)

    def tolist(self):
        return self.cells.tolist()


def _check_cells(arr):
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise exc.NotSquare(f"expected a non-empty square table, got shape {arr.shape}")
    n = arr.shape[0]
    bad = np.argwhere((arr < 1) | (arr > n))
    if len(bad):
        r, c = bad[0]
        raise exc.ValueOutOfRange(int(r) + 1, int(c) + 1, int(arr[r, c]))
    for r in range(n):
        seen = np.zeros(n + 1, dtype=bool)
        for v in arr[r]:
            if seen[v]:
                raise exc.DuplicateInRow(r + 1, int(v))
            seen[v] = True
    for c in range(n):
        seen = np.zeros(n + 1, dtype=bool)
        for v in arr[:, c]:
            if seen[v]:
                raise exc.DuplicateInColumn(c + 1, int(v))
            seen[v] = True


def validate(cells):
    """Validate a table of values and return it as a :class:`LatinSquare`.

    Raises the first violation found: shape, then range (row-major), then
    rows top to bottom, then columns left to right. Reported indices are
    1-based.
    """
    if isinstance(cells, LatinSquare):
        return cells
    try:
        arr = np.array(cells, dtype=np.int64)
    except (ValueError, TypeError) as e:
        raise exc.NotSquare(str(e)) from None
    return LatinSquare(arr)


def _from_zero_based(arr):
    return LatinSquare(np.asarray(arr, dtype=np.int64) + 1)


def gen_cyclic(n):
    """Cayley table of Z_n: ``cell(i, j) = (i + j mod n) + 1`` (0-based i, j)."""
    if n < 1:
        raise exc.ValidationError("order must be positive")
    i = np.arange(n)
    return _from_zero_based((i[:, None] + i[None, :]) % n)


def gen_parity_H(n):
    """The alternating square ``H_n``: ``i+j`` on even-parity cells, ``-i-j`` on odd."""
    if n < 1 or n % 2:
        raise exc.OddOrder(f"H_n needs an even order, got {n}")
    i = np.arange(n)
    s = i[:, None] + i[None, :]
    return _from_zero_based(np.where(s % 2 == 0, s % n, (-s) % n))


# block offsets (row block, column block) -> s for the two 3x3 block layouts
_J_OFFSETS = np.array([[0, 1, 2], [1, 2, 0], [2, 0, 1]])
_K_OFFSETS = np.array([[0, 2, 1], [1, 0, 2], [2, 1, 0]])


def gen_swap_pair(n):
    """The pair ``(J_n, K_n)`` of block-cyclic squares for ``n`` divisible by 3.

    With ``t = n/3``, ``x* = x mod t`` and block offsets ``s`` in ``{0, 1, 2}``
    the cell value is ``3(x* + y*) + s mod n`` (0-based). The offset sits
    outside the factor 3; with it inside only multiples of 3 would occur.
    """
    if n < 3 or n % 3:
        raise exc.NotDivisibleBy3(f"order must be a positive multiple of 3, got {n}")
    t = n // 3
    i = np.arange(n)
    star = i % t
    blk = i // t
    base = 3 * (star[:, None] + star[None, :])
    J = (base + _J_OFFSETS[blk[:, None], blk[None, :]]) % n
    K = (base + _K_OFFSETS[blk[:, None], blk[None, :]]) % n
    return _from_zero_based(J), _from_zero_based(K)


def gen_very_local(k):
    """Very local cyclic square of order ``k**2``.

    Row ``(i-1)k + x`` and column ``(j-1)k + y`` (1-based ``i, j, x, y``) hold
    ``i + j + (x + y - 2)k mod k**2``, shifted into ``1..n``.
    """
    if k < 1:
        raise exc.ValidationError("k must be positive")
    n = k * k
    pos = np.arange(1, n + 1)
    blk = (pos - 1) // k + 1
    off = (pos - 1) % k + 1
    vals = (blk[:, None] + blk[None, :] + (off[:, None] + off[None, :] - 2) * k) % n
    return _from_zero_based(vals)


def transpose(L):
    L = validate(L)
    return LatinSquare(L.cells.T, _checked=True)


def column_value_swap(L):
    """Swap column indices and values: ``L'(x, z) = y`` whenever ``L(x, y) = z``."""
    L = validate(L)
    n = L.order
    out = np.empty_like(L.cells)
    rows = np.repeat(np.arange(n), n)
    cols = np.tile(np.arange(1, n + 1), n)
    out[rows, L.cells.ravel() - 1] = cols
    return LatinSquare(out, _checked=True)


def gen_random_uniform(n, seed=0, steps=None):
    """Approximately uniform random Latin square via a Jacobson–Matthews chain.

    The chain starts from the cyclic square and runs until ``steps`` moves
    (default ``n**3``) have landed on a proper square; that square is
    returned. Counting proper landings rather than raw moves matters: the
    chain is uniform on proper squares only along its proper visits, and
    "first proper state after a fixed move count" is biased towards squares
    with many intercalates. Pure function of ``(n, seed, steps)``.
    """
    if n < 1:
        raise exc.ValidationError("order must be positive")
    if steps is None:
        steps = n ** 3
    if n == 1 or steps <= 0:
        return gen_cyclic(n)
    rng = rng_for(seed, n, steps)
    cube = np.zeros((n, n, n), dtype=np.int8)
    i = np.arange(n)
    cube[i[:, None], i[None, :], (i[:, None] + i[None, :]) % n] = 1
    state = np.zeros(4, dtype=np.int64)
    remaining = int(steps)
    while remaining > 0:
        # a proper landing happens on well over half of all moves
        chunk = min(1 << 16, 2 * remaining + 64)
        remaining -= jm_run(cube, state, rng.random((chunk, 3)), remaining)
    return LatinSquare(np.argmax(cube, axis=2) + 1, _checked=True)


def enumerate_latin_squares(n):
    """All Latin squares of order ``n`` (small ``n`` only; 576 at ``n = 4``)."""
    if n > 5:
        raise exc.TooLarge("enumeration is limited to order <= 5")
    grid = np.zeros((n, n), dtype=np.int64)
    out = []

    def place(pos):
        if pos == n * n:
            out.append(LatinSquare(grid + 0, _checked=True))
            return
        r, c = divmod(pos, n)
        used = set(grid[r, :c]) | set(grid[:r, c])
        for v in range(1, n + 1):
            if v not in used:
                grid[r, c] = v
                place(pos + 1)
        grid[r, c] = 0

    place(0)
    return out
