import itertools
from math import factorial, log, sqrt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latinon import exceptions as exc
from latinon.cutnorm import cutnorm_distval, cutnorm_masses, cutnorm_step, order_displacement
from latinon.density import step_density_all, step_density_exact
from latinon.distance import counting_constant, delta_lower, delta_upper
from latinon.latin import gen_cyclic
from latinon.patterns import enumerate_patterns
from latinon.regularity import hom_density_tuple, stepping, weak_regularity
from latinon.step import (IntervalPartition, StepBigraphon, anticompress, compress, random_step_latinon, refine_common,
                          represent, standard_cyclic_step, uniform_latinon)


def brute_cut(w):
    """Max over all row and column subsets of |sum|."""
    w = np.asarray(w, dtype=float)
    best = 0.0
    for rmask in itertools.product([0, 1], repeat=w.shape[0]):
        r = np.array(rmask, bool)
        for cmask in itertools.product([0, 1], repeat=w.shape[1]):
            best = max(best, abs(w[np.ix_(r, np.array(cmask, bool))].sum()))
    return best


def brute_distval(a, b):
    """All row sets, column sets and value intervals of whole cells."""
    ma, mb = a.masses(), b.masses()
    d = ma.shape[2]
    best = 0.0
    for lo in range(d):
        for hi in range(lo + 1, d + 1):
            best = max(best, brute_cut((ma[:, :, lo:hi] - mb[:, :, lo:hi]).sum(axis=2)))
    return best


def fine_displacement(pi, R=6):
    """Evaluate O - O^pi at midpoints of an R-fold finer grid, then average back onto blocks."""
    M = len(pi)
    t = (np.arange(M * R) + 0.5) / (M * R)
    blk = (t * M).astype(int)
    moved = (np.asarray(pi)[blk] + (t * M - blk)) / M
    D = (t[:, None] < t[None, :]).astype(float) - (moved[:, None] < moved[None, :]).astype(float)
    return D.reshape(M, R, M, R).mean(axis=(1, 3)) / (M * M)


def rand_signed(seed, m=10, n=10):
    rng = np.random.default_rng(seed)
    return StepBigraphon.uniform_grid(rng.uniform(-1, 1, (m, n)))


def test_cutnorm_step_examples():
    p = IntervalPartition.uniform(4)
    assert cutnorm_step(StepBigraphon(p, p, np.zeros((4, 4)))).value == 0.0
    one = cutnorm_step(StepBigraphon([1.0], [1.0], [[0.3]]))
    assert one.value == pytest.approx(0.3) and one.exact


def test_cutnorm_exact_matches_brute_force():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        w = rng.uniform(-1, 1, (5, 6)) * rng.dirichlet(np.ones(5))[:, None]
        res = cutnorm_masses(w)
        assert res.value == pytest.approx(brute_cut(w), abs=1e-14)
        assert abs(w[np.ix_(res.rows, res.cols)].sum()) == pytest.approx(res.value, abs=1e-14)


def test_local_search_never_exceeds_exact():
    agree = 0
    for seed in range(100):
        D = rand_signed(seed)
        ex = cutnorm_step(D, mode="exact").value
        ls = cutnorm_step(D, mode="local_search", seed=seed).value
        assert ls <= ex + 1e-12
        agree += abs(ls - ex) <= 1e-12
    assert agree >= 99


def test_exact_limit():
    with pytest.raises(exc.TooManyCellsForExact):
        cutnorm_step(rand_signed(0, 30, 30), mode="exact")


def test_distval_zero_and_brute():
    W = random_step_latinon(3, 3, 3, np.random.default_rng(0))
    assert cutnorm_distval(W, W).value == 0.0
    a, b = refine_common(uniform_latinon(), represent(gen_cyclic(2)), 2)
    res = cutnorm_distval(a, b)
    assert res.value == pytest.approx(brute_distval(a, b), abs=1e-15)
    assert res.value == pytest.approx(0.125)


def test_distval_partition_mismatch():
    with pytest.raises(exc.PartitionMismatch):
        cutnorm_distval(uniform_latinon(), represent(gen_cyclic(2)))


def test_order_displacement():
    assert order_displacement(np.arange(5)).value == 0.0
    swap = order_displacement([1, 0])
    assert swap.value == pytest.approx(brute_cut(fine_displacement([1, 0])))
    assert swap.value == pytest.approx(0.25)
    rev = np.arange(8)[::-1]
    assert order_displacement(rev).value == pytest.approx(brute_cut(fine_displacement(rev)), abs=1e-14)


def test_delta_upper_self():
    W = random_step_latinon(3, 4, 3, np.random.default_rng(1), spread=0)
    est = delta_upper(W, W, M=12)
    assert est.upper <= est.slack + 1e-12
    phi, psi = est.upper_certificate
    assert list(phi) == list(range(12)) and list(psi) == list(range(12))


def test_delta_upper_cyclic_bound():
    n = 16
    est = delta_upper(represent(gen_cyclic(n)), standard_cyclic_step(n), M=n)
    assert est.upper <= 2 / n + 1 / (2 * n) + est.slack


def test_delta_sandwich():
    U, C = uniform_latinon(), represent(gen_cyclic(16))
    up = delta_upper(U, C, M=16)
    low = delta_lower(U, C, max_kl=4)
    assert 0 <= low.lower <= up.upper


def test_delta_lower_examples():
    W = random_step_latinon(2, 2, 2, np.random.default_rng(4))
    assert delta_lower(W, W).lower == 0.0
    low = delta_lower(uniform_latinon(), represent(gen_cyclic(8)), shapes=[(1, 2)])
    assert low.lower > 0
    pat, gap, c = low.lower_certificate
    assert c == counting_constant(1, 2)
    assert low.lower == pytest.approx((gap / c) ** 4)


def test_counting_constant_formula():
    k, l = 2, 2
    want = 2 * 2 * 2 * 4 * 3 + 2 ** 4 * 2 * 2 * (4 + 1 + 1)
    assert counting_constant(k, l) == want == 480


def test_hom_density_examples():
    p = IntervalPartition.uniform(3)
    assert hom_density_tuple([(0, 1, 0)], [StepBigraphon(p, p, np.full((3, 3), 0.4))]) == pytest.approx(0.4)
    P = StepBigraphon(p, p, np.full((3, 3), 0.3))
    Q = StepBigraphon(p, p, np.full((3, 3), 0.7))
    cycle = [(0, 1, 0), (1, 2, 1), (2, 3, 0), (3, 0, 1)]
    assert hom_density_tuple(cycle, [P, Q]) == pytest.approx((0.3 * 0.7) ** 2)
    with pytest.raises(exc.TooManyVertices):
        hom_density_tuple([(0, 9, 0)], [P])


def test_hom_density_brute_force():
    rng = np.random.default_rng(3)
    p = IntervalPartition(rng.dirichlet(np.ones(3)))
    Ws = [StepBigraphon(p, p, rng.random((3, 3))) for _ in range(2)]
    edges = [(0, 1, 0), (1, 2, 1), (0, 2, 0)]
    want = sum(p.lengths[a] * p.lengths[b] * p.lengths[c] * Ws[0].values[a, b] * Ws[1].values[b, c]
               * Ws[0].values[a, c] for a, b, c in itertools.product(range(3), repeat=3))
    assert hom_density_tuple(edges, Ws) == pytest.approx(want)


def test_counting_lemma_for_tuples():
    rng = np.random.default_rng(5)
    p = IntervalPartition.uniform(4)
    U = [StepBigraphon(p, p, rng.random((4, 4))) for _ in range(2)]
    W = [StepBigraphon(p, p, np.clip(u.values + rng.normal(0, 0.05, (4, 4)), 0, 1)) for u in U]
    eps = max(cutnorm_step(a - b).value for a, b in zip(U, W))
    edges = [(0, 1, 0), (1, 2, 1), (2, 0, 0), (2, 3, 1)]
    assert abs(hom_density_tuple(edges, U) - hom_density_tuple(edges, W)) <= eps * len(edges) + 1e-12


def test_regularity_constant_on_prepartition():
    p = IntervalPartition([0.2, 0.3, 0.5])
    vals = np.array([[0.1, 0.5, 0.9], [0.3, 0.3, 0.2], [0.6, 0.0, 1.0]])
    res = weak_regularity([StepBigraphon(p, p, vals)], r=4, prepartition=p)
    assert res.n_classes == 3 and max(res.errors) == 0.0


def test_regularity_random_step():
    U = StepBigraphon.uniform_grid(np.random.default_rng(0).random((32, 32)))
    res = weak_regularity([U], r=16)
    assert max(res.errors_upper) < sqrt(2 / log(16))


def test_stepping_contracts_cut_norm():
    rng = np.random.default_rng(2)
    lengths = IntervalPartition.uniform(8).lengths
    for _ in range(20):
        a, b = rng.random((8, 8)), rng.random((8, 8))
        labels = np.unique(rng.integers(0, 3, 8), return_inverse=True)[1]
        area = np.outer(lengths, lengths)
        before = cutnorm_masses((a - b) * area).value
        after = cutnorm_masses((stepping(a, lengths, labels) - stepping(b, lengths, labels)) * area).value
        assert after <= before + 1e-12


def rand_pair(seed):
    rng = np.random.default_rng(seed)
    m = [int(v) for v in rng.integers(1, 4, 3)]
    return random_step_latinon(*m, rng), random_step_latinon(*m, rng)


@given(st.integers(0, 2 ** 32))
def test_cutnorm_negation_symmetric(seed):
    D = rand_signed(seed, 6, 7)
    assert cutnorm_step(D).value == pytest.approx(cutnorm_step(-D).value, abs=1e-14)


@given(st.integers(0, 2 ** 32))
def test_distval_dominates_certificates(seed):
    a, b = rand_pair(seed)
    a, b = refine_common(a, b, 4)
    res = cutnorm_distval(a, b)
    rng = np.random.default_rng(seed)
    D = a.masses() - b.masses()
    for _ in range(20):
        r, c = rng.random(4) < 0.5, rng.random(4) < 0.5
        lo = int(rng.integers(0, D.shape[2]))
        hi = int(rng.integers(lo + 1, D.shape[2] + 1))
        assert abs(D[np.ix_(r, c)][:, :, lo:hi].sum()) <= res.value + 1e-12


@given(st.integers(0, 2 ** 32), st.integers(1, 3))
def test_compressed_difference_bound(seed, d):
    a, b = rand_pair(seed)
    a, b = refine_common(a, b, 3)
    total = sum(cutnorm_step(x - y).value for x, y in zip(compress(a, d), compress(b, d)))
    assert cutnorm_distval(anticompress(compress(a, d)), anticompress(compress(b, d))).value <= total + 1e-12


@given(st.integers(0, 2 ** 32))
def test_lower_below_upper(seed):
    a, b = rand_pair(seed)
    up = delta_upper(a, b, M=6, search_budget=32, restarts=2)
    assert 0 <= delta_lower(a, b, max_kl=4).lower <= up.upper


@given(st.integers(0, 2 ** 32))
def test_counting_inequality(seed):
    a, b = rand_pair(seed)
    up = delta_upper(a, b, M=6, search_budget=32, restarts=2).upper
    gaps = np.abs(step_density_all(a, 2, 2) - step_density_all(b, 2, 2))
    assert gaps.max() <= counting_constant(2, 2) * up ** (1 / 8) + 1e-12


@given(st.integers(0, 2 ** 32))
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_step_latinon(2, 2, 2, rng, spread=0) for _ in range(3))
    ab = delta_upper(a, b, M=4, search_budget=32, restarts=2)
    bc = delta_upper(b, c, M=4, search_budget=32, restarts=2)
    ac = delta_upper(a, c, M=4, search_budget=32, restarts=2)
    assert ac.upper <= ab.upper + bc.upper + 2 * max(ab.slack, bc.slack, ac.slack) + 1e-12


def test_step_density_exact_on_uniform_sum():
    U = uniform_latinon()
    assert sum(step_density_exact(A, U).value for A in enumerate_patterns(2, 2)) == pytest.approx(1.0)
    assert step_density_exact([[1, 2, 3], [4, 5, 6]], U).value == pytest.approx(1 / factorial(6))


def test_repeated_rows_merge_exactly():
    rng = np.random.default_rng(8)
    base = rng.uniform(-1, 1, (4, 3))
    w = base[[0, 0, 1, 2, 2, 3]][:, [0, 1, 1, 2]]
    res = cutnorm_masses(w)
    assert res.value == pytest.approx(brute_cut(w), abs=1e-14)
    assert abs(w[np.ix_(res.rows, res.cols)].sum()) == pytest.approx(res.value, abs=1e-14)
