from math import log

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latinon import exceptions as exc
from latinon.density import step_density_all
from latinon.io import dumps_latinon, loads_latinon
from latinon.latin import enumerate_latin_squares, gen_cyclic, gen_random_uniform, validate
from latinon.step import (IntervalPartition, SemiLatinon, StepBigraphon, StepLatinon, anticompress, compress,
                          entropy, random_step_latinon, refine_common, represent, standard_cyclic_step,
                          uniform_latinon, validate_latinon)


def latinon_from_seed(seed, m_r=3, m_c=3, d=3):
    return random_step_latinon(m_r, m_c, d, np.random.default_rng(seed))


latinons = st.builds(latinon_from_seed, st.integers(0, 2 ** 32), st.integers(1, 4), st.integers(1, 4),
                     st.integers(1, 4))


def test_partition_checks():
    with pytest.raises(exc.PartitionError):
        IntervalPartition([0.5, 0.4])
    with pytest.raises(exc.PartitionError):
        IntervalPartition([1.0, 0.0])
    p = IntervalPartition([0.25, 0.75])
    assert p.cell_of([0.0, 0.25, 0.9999, 1.0]).tolist() == [0, 1, 1, 1]


def test_uniform_latinon_valid():
    W = validate_latinon(SemiLatinon([1.0], [1.0], [1.0], [[[1.0]]]))
    assert isinstance(W, StepLatinon)


def test_two_cyclic_by_hand():
    alpha = np.zeros((2, 2, 2))
    for i in range(2):
        for j in range(2):
            alpha[i, j, i ^ j] = 1.0
    validate_latinon(SemiLatinon([0.5, 0.5], [0.5, 0.5], [0.5, 0.5], alpha))


def test_marginal_violations():
    alpha = np.zeros((2, 2, 2))
    alpha[:, :, 0] = 1.0
    with pytest.raises(exc.RowMarginalViolation) as e:
        validate_latinon(SemiLatinon([0.5, 0.5], [0.5, 0.5], [0.5, 0.5], alpha))
    assert (e.value.i, e.value.k) == (0, 0)
    assert e.value.residual == pytest.approx(0.5)
    # rows fine, columns not
    alpha = np.zeros((2, 2, 2))
    alpha[0, 0, 0] = alpha[1, 0, 0] = 1.0
    alpha[0, 1, 1] = alpha[1, 1, 1] = 1.0
    with pytest.raises(exc.ColMarginalViolation):
        validate_latinon(SemiLatinon([0.5, 0.5], [0.5, 0.5], [0.5, 0.5], alpha))


def test_semilatinon_checks():
    with pytest.raises(exc.SumNotOne):
        SemiLatinon([1.0], [1.0], [0.5, 0.5], [[[0.5, 0.4]]])
    with pytest.raises(exc.PartitionMismatch):
        SemiLatinon([1.0], [1.0], [1.0], [[[0.5, 0.5]]])


def test_represent():
    assert represent(validate([[1]])) == uniform_latinon()
    W = represent(gen_cyclic(2))
    ones = {tuple(int(v) + 1 for v in idx) for idx in np.argwhere(W.alpha == 1)}
    assert ones == {(1, 1, 1), (1, 2, 2), (2, 1, 2), (2, 2, 1)}
    W64 = represent(gen_cyclic(64))
    assert W64.shape == (64, 64, 64)
    assert np.count_nonzero(W64.alpha) == 64 ** 2


def test_represent_all_order_four():
    for L in enumerate_latin_squares(4):
        validate_latinon(SemiLatinon(*[IntervalPartition.uniform(4)] * 3, represent(L).alpha))


def test_too_large():
    with pytest.raises(exc.TooLarge):
        SemiLatinon(IntervalPartition.uniform(300), IntervalPartition.uniform(300), IntervalPartition.uniform(300),
                    np.full((300, 300, 300), 1 / 300))


def fine_cyclic_oracle(m, per_cell=400):
    # histogram of x + y mod 1 over a midpoint grid inside each cell
    t = (np.arange(per_cell) + 0.5) / per_cell
    alpha = np.zeros((m, m, m))
    for i in range(m):
        for j in range(m):
            s = ((i + t[:, None]) / m + (j + t[None, :]) / m) % 1.0
            alpha[i, j] = np.bincount(np.minimum((s * m).astype(int), m - 1).ravel(), minlength=m) / per_cell ** 2
    return alpha


def test_standard_cyclic_step():
    assert standard_cyclic_step(1) == uniform_latinon()
    W2 = standard_cyclic_step(2)
    assert np.allclose(W2.alpha, 0.5)
    for m in (3, 5):
        assert np.allclose(standard_cyclic_step(m).alpha, fine_cyclic_oracle(m), atol=5e-3)
    row, col = standard_cyclic_step(7).marginal_residuals()
    assert np.abs(row).max() < 1e-15 and np.abs(col).max() < 1e-15


def test_compress_examples():
    halves = compress(uniform_latinon(), 1)
    assert [p.values.tolist() for p in halves] == [[[0.5]], [[0.5]]]
    W1, W2 = compress(represent(gen_cyclic(2)), 1)
    assert W1.values.tolist() == [[1.0, 0.0], [0.0, 1.0]]
    assert W2.values.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_anticompress_examples():
    U = anticompress(compress(uniform_latinon(), 3))
    assert isinstance(U, StepLatinon)
    assert np.allclose(U.alpha, 1 / 8) and U.value_parts == IntervalPartition.dyadic(3)
    W = represent(gen_cyclic(8))
    again = compress(anticompress(compress(W, 3)), 3)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(again, compress(W, 3)))
    p = IntervalPartition.uniform(2)
    bad = [StepBigraphon(p, p, np.full((2, 2), 0.45)), StepBigraphon(p, p, np.full((2, 2), 0.45))]
    with pytest.raises(exc.SumNotOne):
        anticompress(bad)


def test_refine_common_examples():
    ref = refine_common(uniform_latinon(), uniform_latinon(), 8)
    assert ref.a.shape == (8, 8, 1) and np.allclose(ref.a.alpha, 1.0) and ref.slack == 0
    W = represent(gen_cyclic(2))
    ref = refine_common(W, W, 4)
    assert np.array_equal(ref.a.alpha, np.repeat(np.repeat(W.alpha, 2, axis=0), 2, axis=1))
    assert ref.slack == 0
    assert refine_common(W, W, 3).slack > 0


def test_entropy_examples():
    assert entropy(uniform_latinon()) == 0.0
    for n in range(1, 17):
        assert entropy(represent(gen_random_uniform(n, seed=n, steps=50))) == pytest.approx(log(n), abs=1e-12)
    # cell averages of the cyclic Latinon split each cell in half, so the sum is log(m / 2)
    for m in (2, 4, 8):
        assert entropy(standard_cyclic_step(m)) == pytest.approx(log(m / 2), abs=1e-12)


def test_json_round_trip():
    W = latinon_from_seed(3)
    text = dumps_latinon(W)
    assert dumps_latinon(loads_latinon(text)) == text


@given(latinons)
def test_random_latinons_valid(W):
    validate_latinon(W)


@given(latinons, st.integers(1, 5))
def test_compression_sums_to_one_and_round_trips(W, d):
    parts = compress(W, d)
    assert np.allclose(sum(p.values for p in parts), 1.0, atol=1e-12)
    again = compress(anticompress(parts), d)
    for a, b in zip(again, parts):
        assert np.allclose(a.values, b.values, atol=1e-15)


@given(latinons)
def test_entropy_nonnegative(W):
    assert entropy(W) >= -1e-12


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_entropy_zero_iff_uniform_cells(m_r, m_c, d):
    rng = np.random.default_rng(m_r * 100 + m_c * 10 + d)
    P, C, Q = (IntervalPartition(rng.dirichlet(np.ones(m)) * 0.5 + 0.5 / m) for m in (m_r, m_c, d))
    flat = StepLatinon(P, C, Q, np.broadcast_to(Q.lengths, (m_r, m_c, d)))
    assert abs(entropy(flat)) < 1e-15


@given(latinons, st.integers(1, 12))
def test_refinement_keeps_latinon(W, M):
    a, b = refine_common(W, uniform_latinon(), M)
    validate_latinon(a)
    validate_latinon(b)


def test_refine_common_exact():
    a = random_step_latinon(2, 3, 2, np.random.default_rng(3))
    b = standard_cyclic_step(3)
    ra, rb = refine_common(a, b)
    assert ra.row_parts == rb.row_parts and ra.value_parts == rb.value_parts
    assert refine_common(a, b).slack == 0
    # restepping onto a refinement keeps every cell mass
    assert ra.masses().sum(axis=2) == pytest.approx(np.outer(ra.row_parts.lengths, ra.col_parts.lengths))
    assert step_density_all(ra, 2, 2) == pytest.approx(step_density_all(a, 2, 2), abs=1e-12)
