"""Experiment runners shared by the command line and the acceptance tests."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, isqrt

import numpy as np

from . import exceptions as exc
from .density import density_vector, pattern_counts
from .latin import (column_value_swap, gen_cyclic, gen_parity_H, gen_random_uniform, gen_swap_pair,
                    gen_very_local, transpose)
from .step import standard_cyclic_step, uniform_latinon

__all__ = ["SQUARE_FAMILIES", "generate", "latinon_family", "swap_closed_form", "swap_row", "swap_experiment",
           "extrapolate", "convergence_table"]

SQUARE_FAMILIES = ("cyclic", "parity-H", "parity-P", "J", "K", "J-prime", "K-prime", "very-local", "random",
                   "cyclic-transpose")


def generate(family, n, seed=0, steps=None):
    """Latin square of order ``n`` from a named family."""
    if family == "cyclic":
        return gen_cyclic(n)
    if family == "cyclic-transpose":
        return transpose(gen_cyclic(n))
    if family == "parity-H":
        return gen_parity_H(n)
    if family == "parity-P":
        from .synthesis import parity_realize
        return parity_realize(n, seed=seed).square
    if family in ("J", "K", "J-prime", "K-prime"):
        J, K = gen_swap_pair(n)
        L = J if family.startswith("J") else K
        return column_value_swap(L) if family.endswith("prime") else L
    if family == "very-local":
        k = isqrt(n)
        if k * k != n:
            raise exc.ValidationError(f"very-local squares need a perfect square order, got {n}")
        return gen_very_local(k)
    if family == "random":
        return gen_random_uniform(n, seed=seed, steps=steps)
    raise exc.ValidationError(f"unknown family {family!r}; choose from {', '.join(SQUARE_FAMILIES)}")


def latinon_family(name, m=4):
    if name == "uniform":
        return uniform_latinon()
    if name == "cyclic":
        return standard_cyclic_step(m)
    if name == "parity":
        from .synthesis import parity_latinon
        return parity_latinon(m)
    raise exc.ValidationError(f"unknown Latinon family {name!r}; choose uniform, cyclic or parity")


def swap_closed_form(n):
    """The stated values of ``t([[2, 1]], J'_n)``, ``t([[2, 1]], K'_n)`` and their gap."""
    t = n // 3
    s = sum(comb(t - i, 2) + comb(i, 2) for i in range(t))
    den = n * comb(n, 2)
    tj = (9 * s + 2 * n * t * t) / den
    tk = (9 * s + n * t * t) / den
    return tj, tk, n * t * t / den


@dataclass
class SwapRow:
    n: int
    t_J: float
    t_K: float
    gap: float
    closed_t_J: float
    closed_t_K: float
    closed_gap: float

    def as_row(self):
        return {k: (repr(v) if isinstance(v, float) else v) for k, v in self.__dict__.items()}


def swap_row(n):
    """Exact densities of the pattern ``[[2, 1]]`` in ``J'_n`` and ``K'_n``."""
    J, K = gen_swap_pair(n)
    cj, total = pattern_counts(column_value_swap(J), 1, 2)
    ck, _ = pattern_counts(column_value_swap(K), 1, 2)
    # rank 1 of the 1 x 2 patterns is [[2, 1]]
    tj = float(cj[1] / total)
    tk = float(ck[1] / total)
    return SwapRow(n, tj, tk, abs(tj - tk), *swap_closed_form(n))


def extrapolate(ns, values):
    """Limit of ``values`` assuming ``v(n) = v_inf + c / n``, from the last two points."""
    (n1, n2), (v1, v2) = ns[-2:], values[-2:]
    return float((n2 * v2 - n1 * v1) / (n2 - n1))


def swap_experiment(ns=(300, 600)):
    """Swap rows for every ``n`` plus the extrapolated limit of the gap."""
    rows = [swap_row(n) for n in ns]
    limit = extrapolate([r.n for r in rows], [r.gap for r in rows]) if len(rows) > 1 else rows[0].gap
    return rows, limit


def convergence_table(family, ns, k, l, mode="exact", samples=10 ** 5, seed=0, threads=1, steps=None):
    """Density vectors along a sequence of orders, with the largest change between neighbours."""
    table = []
    for n in ns:
        L = generate(family, n, seed=seed, steps=steps)
        reps = density_vector(L, k, l, mode=mode, samples=samples, seed=seed, threads=threads)
        table.append(np.array([r.value for r in reps]))
    table = np.array(table)
    gaps = np.abs(np.diff(table, axis=0)).max(axis=1) if len(ns) > 1 else np.zeros(0)
    return table, gaps
