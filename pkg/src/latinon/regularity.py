"""Homomorphism densities of bigraphon tuples and weak regularity partitions.

Both work on *atoms*: the common refinement of the row and column
partitions, so that a single partition of [0, 1] can be used on both axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import log, sqrt
from string import ascii_letters

import numpy as np

from . import exceptions as exc
from .cutnorm import EXACT_LIMIT, cutnorm_masses, group_upper_bound
from .step import IntervalPartition, StepBigraphon, overlap_matrix

MAX_VERTICES = 8

__all__ = ["atoms_of", "hom_density_tuple", "weak_regularity", "RegularityResult", "stepping", "on_atoms"]


def atoms_of(*partitions):
    """Coarsest common refinement of the given interval partitions."""
    b = np.unique(np.concatenate([p.boundaries for p in partitions]))
    keep = np.concatenate([[True], np.diff(b) > 1e-15])
    b = b[keep]
    b[-1] = 1.0
    return IntervalPartition.from_boundaries(b)


def _cell_index(atoms, part):
    O = overlap_matrix(atoms, part)
    return np.argmax(O, axis=1)


def on_atoms(W, atoms):
    """Values of the step function ``W`` on the ``atoms x atoms`` grid."""
    ri = _cell_index(atoms, W.row_parts)
    ci = _cell_index(atoms, W.col_parts)
    return W.values[np.ix_(ri, ci)]


def hom_density_tuple(edges, W, n_vertices=None):
    """``t(F, W) = int prod_{(u, v, c) in F} W_c(x_u, x_v) dx`` for step functions.

    ``edges`` is a list of ``(u, v, c)``: an edge from vertex ``u`` to
    vertex ``v`` labelled with the index ``c`` of a step function in ``W``.
    Vertices are ``0 .. n_vertices - 1``.
    """
    W = list(W)
    edges = [(int(u), int(v), int(c)) for u, v, c in edges]
    if n_vertices is None:
        n_vertices = 1 + max([max(u, v) for u, v, _ in edges], default=-1)
    if n_vertices > MAX_VERTICES:
        raise exc.TooManyVertices(f"{n_vertices} vertices > {MAX_VERTICES}")
    if n_vertices == 0:
        return 1.0
    for _, _, c in edges:
        if not 0 <= c < len(W):
            raise exc.ValidationError(f"edge label {c} has no step function")
    atoms = atoms_of(*[p for w in W for p in (w.row_parts, w.col_parts)])
    grids = [on_atoms(w, atoms) for w in W]
    letters = ascii_letters[:n_vertices]
    operands = []
    specs = []
    for v in range(n_vertices):
        operands.append(atoms.lengths)
        specs.append(letters[v])
    for u, v, c in edges:
        operands.append(grids[c])
        specs.append(letters[u] + letters[v])
    return float(np.einsum(",".join(specs) + "->", *operands, optimize=True))


def stepping(values, lengths, labels):
    """Average ``values`` (on the atom grid) over the product classes given by ``labels``."""
    labels = np.asarray(labels)
    k = labels.max() + 1
    onehot = np.zeros((len(labels), k))
    onehot[np.arange(len(labels)), labels] = lengths
    size = onehot.sum(axis=0)
    block = onehot.T @ values @ onehot / np.outer(size, size)
    return block[np.ix_(labels, labels)]


@dataclass
class RegularityResult:
    atoms: IntervalPartition
    labels: np.ndarray
    steppings: list
    errors: list
    errors_upper: list
    threshold: float
    iterations: int
    capped: bool

    @property
    def n_classes(self):
        return int(self.labels.max()) + 1


def _relabel(keys):
    _, inv = np.unique(keys, axis=0, return_inverse=True)
    return inv.ravel()


def _prepartition_labels(atoms, prepartition):
    if prepartition is None:
        return np.zeros(len(atoms), dtype=np.int64)
    if isinstance(prepartition, IntervalPartition):
        return _cell_index(atoms, prepartition)
    labels = np.asarray(prepartition, dtype=np.int64)
    if labels.shape != (len(atoms),):
        raise exc.PartitionMismatch("prepartition labels must give one class per atom")
    return _relabel(labels[:, None])


def weak_regularity(W, r, prepartition=None, threshold=None, seed=0, exact_limit=EXACT_LIMIT,
                    max_iterations=64):
    """Refine ``prepartition`` until every stepping is within ``threshold`` in cut norm.

    ``threshold`` defaults to ``sqrt(2 m / ln r)`` for a tuple of ``m`` step
    functions. Each round takes the component with the largest error and
    splits every class along the row and column sets of its cut-norm
    certificate. Refinement stops once the errors are below threshold, or
    when another split could exceed ``r`` times the number of prepartition
    classes.
    """
    W = list(W)
    m = len(W)
    if m == 0:
        raise exc.ValidationError("need at least one step function")
    if r < 2:
        raise exc.ValidationError("r must be at least 2")
    if threshold is None:
        threshold = sqrt(2.0 * m / log(r))
    parts = [p for w in W for p in (w.row_parts, w.col_parts)]
    if isinstance(prepartition, IntervalPartition):
        parts.append(prepartition)
    atoms = atoms_of(*parts)
    lengths = atoms.lengths
    grids = [on_atoms(w, atoms) for w in W]
    labels = _prepartition_labels(atoms, prepartition)
    cap = r * (int(labels.max()) + 1)
    area = np.outer(lengths, lengths)
    mode = "exact" if len(atoms) <= exact_limit else "local_search"

    def evaluate(labels):
        steps = [stepping(g, lengths, labels) for g in grids]
        res = [cutnorm_masses((g - s) * area, mode=mode, seed=seed, exact_limit=exact_limit, certify=False)
               for g, s in zip(grids, steps)]
        return steps, res

    steps, res = evaluate(labels)
    iterations = 0
    capped = False
    while max(x.value for x in res) >= threshold and iterations < max_iterations:
        worst = max(range(m), key=lambda i: res[i].value)
        cert = res[worst]
        keys = np.stack([labels, cert.rows.astype(np.int64), cert.cols.astype(np.int64)], axis=1)
        new = _relabel(keys)
        if new.max() + 1 > cap:
            capped = True
            break
        if new.max() == labels.max():
            break
        labels = new
        steps, res = evaluate(labels)
        iterations += 1
    if mode == "exact":
        upper = [x.value for x in res]
    else:
        upper = [float(group_upper_bound((g - s) * area)) for g, s in zip(grids, steps)]
    step_objs = [StepBigraphon(atoms, atoms, s) for s in steps]
    return RegularityResult(atoms, labels, step_objs, [x.value for x in res], upper, threshold, iterations, capped)
