"""Patterns: ``k x l`` tables holding a permutation of ``1..kl``.

Every table with distinct entries canonicalizes to the pattern recording the
rank of each entry. Patterns of a given shape are indexed by the
lexicographic rank of their flattened entries, which is also their position
in :func:`enumerate_patterns`.
"""
from __future__ import annotations

import itertools
from math import factorial

import numpy as np

from . import exceptions as exc

MAX_CELLS = 12

__all__ = ["Pattern", "canonicalize", "enumerate_patterns", "pattern_rank", "pattern_from_rank", "lehmer_ranks"]


class Pattern:
    """A ``k x l`` pattern; ``entries`` is a read-only int array with values ``1..kl``."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.size == 0:
            raise exc.ValidationError("a pattern is a non-empty 2-D table")
        if not np.array_equal(np.sort(arr.ravel()), np.arange(1, arr.size + 1)):
            raise exc.ValidationError("pattern entries must be a permutation of 1..k*l")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Pattern is immutable")

    @property
    def k(self):
        return self.entries.shape[0]

    @property
    def l(self):  # noqa: E743
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    @property
    def rank(self):
        return pattern_rank(self)

    @property
    def id(self):
        """Flattened entries joined by dashes, e.g. ``"2-3-1-4"``."""
        return "-".join(str(int(v)) for v in self.entries.ravel())

    def transpose(self):
        return Pattern(self.entries.T)

    def tolist(self):
        return self.entries.tolist()

    def __eq__(self, other):
        return isinstance(other, Pattern) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.shape, self.entries.tobytes()))

    def __repr__(self):
        return f"Pattern({self.entries.tolist()})"

    @classmethod
    def parse(cls, text, shape=None):
        """Parse ``"1,2;3,4"`` (rows split by ``;``) or a flat ``"1-2-3-4"`` with ``shape``."""
        text = text.strip()
        if ";" in text or shape is None:
            rows = [r for r in text.split(";") if r.strip()]
            return cls([[int(v) for v in r.replace("-", ",").split(",") if v.strip()] for r in rows])
        flat = [int(v) for v in text.replace(",", "-").split("-") if v.strip()]
        return cls(np.array(flat).reshape(shape))


def canonicalize(M):
    """Pattern whose entry ``(i, j)`` is the rank of ``M[i, j]`` among all entries (smallest is 1)."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    flat = arr.ravel()
    order = np.argsort(flat, kind="stable")
    if np.any(np.diff(flat[order]) == 0):
        raise exc.DuplicateEntry("entries must be pairwise distinct")
    ranks = np.empty(flat.size, dtype=np.int64)
    ranks[order] = np.arange(1, flat.size + 1)
    return Pattern(ranks.reshape(arr.shape))


def _check_size(k, l):
    if k < 1 or l < 1:
        raise exc.ValidationError("pattern dimensions must be positive")
    if k * l > MAX_CELLS:
        raise exc.TooLarge(f"patterns with k*l = {k * l} > {MAX_CELLS} are not enumerated")


def enumerate_patterns(k, l):
    """All ``(kl)!`` patterns of shape ``k x l`` in lexicographic order of flattened entries."""
    _check_size(k, l)
    N = k * l
    return [Pattern(np.array(p).reshape(k, l)) for p in itertools.permutations(range(1, N + 1))]


def all_pattern_arrays(k, l):
    """The patterns of shape ``k x l`` as a ``((kl)!, kl)`` int array, in rank order."""
    _check_size(k, l)
    N = k * l
    return np.array(list(itertools.permutations(range(1, N + 1))), dtype=np.int64).reshape(-1, N)


def lehmer_ranks(values):
    """Lexicographic rank of the relative order of each row of ``values`` (shape ``(S, N)``).

    Rows with ties are ranked as if ties were broken left-to-right; callers
    are expected to filter ties first.
    """
    V = np.asarray(values)
    S, N = V.shape
    out = np.zeros(S, dtype=np.int64)
    for i in range(N - 1):
        smaller = (V[:, i + 1:] < V[:, i:i + 1]).sum(axis=1)
        out += smaller * factorial(N - 1 - i)
    return out


def pattern_rank(A):
    return int(lehmer_ranks(A.entries.reshape(1, -1))[0])


def pattern_from_rank(r, k, l):
    """Inverse of :func:`pattern_rank`."""
    N = k * l
    if not 0 <= r < factorial(N):
        raise exc.ValidationError("rank out of range")
    pool = list(range(1, N + 1))
    out = []
    for i in range(N):
        f = factorial(N - 1 - i)
        q, r = divmod(r, f)
        out.append(pool.pop(q))
    return Pattern(np.array(out).reshape(k, l))
