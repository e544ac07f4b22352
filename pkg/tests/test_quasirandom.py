import numpy as np
import pytest
from hypothesis import given, strategies as st

from latinon import exceptions as exc
from latinon import quasirandom
from latinon.latin import gen_cyclic, gen_random_uniform
from latinon.quasirandom import load_witness, quasirandom_test, r22_insufficiency_witness
from latinon.step import random_step_latinon, standard_cyclic_step, uniform_latinon, validate_latinon


def test_uniform_gaps_exactly_zero():
    rep = quasirandom_test(uniform_latinon(), mode="exact")
    assert rep.max_gap_32 == 0.0 and rep.max_gap_22 == 0.0
    assert rep.quasirandom
    assert len(rep.table()) == 720 + 24


def test_cyclic_30_not_quasirandom():
    rep = quasirandom_test(gen_cyclic(30), mode="exact")
    # recorded value: 0.04749 (and 0.1032 on 2 x 2 patterns)
    assert rep.max_gap_32 == pytest.approx(0.0474866, abs=1e-6)
    assert not rep.quasirandom
    # selections with a repeated value match no pattern, so the sum stays below 1
    assert 0 < rep.densities_32.sum() < 1


def test_exact_mode_limit():
    with pytest.raises(exc.BudgetExceeded):
        quasirandom_test(gen_cyclic(41), mode="exact")
    with pytest.raises(exc.ValidationError):
        quasirandom_test([[1]])


def test_report_dict():
    d = quasirandom_test(standard_cyclic_step(3)).to_dict()
    assert set(d) >= {"max_gap_32", "max_gap_22", "worst_pattern_32", "tolerance", "mode", "quasirandom"}
    assert d["mode"] == "exact" and d["quasirandom"] is False


@pytest.mark.parametrize("x", [gen_cyclic(12), standard_cyclic_step(3)], ids=["cyclic12", "step3"])
def test_monte_carlo_agrees_with_exact(x):
    samples = 10 ** 5
    ex = quasirandom_test(x, mode="exact")
    mc = quasirandom_test(x, mode="monte_carlo", samples=samples, seed=5)
    assert np.abs(ex.densities_32 - mc.densities_32).max() <= 4 * mc.radius
    assert np.abs(ex.densities_22 - mc.densities_22).max() <= 4 * mc.radius


def test_random_square_monte_carlo_small():
    L = gen_random_uniform(20, seed=1, steps=20 ** 3)
    rep = quasirandom_test(L, mode="monte_carlo", samples=10 ** 4, seed=2)
    assert rep.tolerance == pytest.approx(4 * rep.radius)


@given(st.integers(0, 2 ** 32))
def test_gaps_nonnegative_and_normalised(seed):
    W = random_step_latinon(2, 2, 2, np.random.default_rng(seed))
    rep = quasirandom_test(W, mode="exact")
    assert rep.max_gap_32 >= 0 and rep.max_gap_22 >= 0
    assert rep.densities_22.sum() == pytest.approx(1.0, abs=1e-9)


def test_witness_is_latinon():
    W = validate_latinon(load_witness())
    assert not np.allclose(W.alpha, W.alpha.mean(axis=2, keepdims=True))


def test_witness_gaps():
    rep = quasirandom_test(load_witness(), mode="exact")
    assert rep.max_gap_22 <= 1e-3
    assert rep.max_gap_32 >= 1e-2


def test_witness_self_check_rejects_uniform(monkeypatch):
    monkeypatch.setattr(quasirandom, "load_witness", uniform_latinon)
    with pytest.raises(exc.WitnessInvalid):
        r22_insufficiency_witness()
