import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avrank import (
    EProcess,
    InvalidEValueError,
    InvalidStatisticError,
    NullCategorical,
    StateError,
    absorb,
    anytime_p,
    e_value_generic,
    e_value_reduced,
)


def test_constant_statistic_gives_one():
    assert e_value_generic([3.0] * 5, 2) == 1.0


def test_linear_statistic():
    assert e_value_generic([1, 2, 3, 4], 4) == pytest.approx(1.6)
    assert e_value_generic(lambda r: r, 4, t=4) == pytest.approx(1.6)


def test_indicator_statistic():
    s = [0, 0, 0, 0, 0, 1]
    assert e_value_generic(s, 6) == 6.0
    assert all(e_value_generic(s, r) == 0.0 for r in range(1, 6))


def test_zero_statistic_is_uninformative():
    assert e_value_generic([0.0, 0.0], 1) == 1.0
    assert e_value_reduced([0, 0, 0], 2, NullCategorical((1, 1, 1), 3)) == 1.0


def test_reduced_matching_null_gives_one():
    null = NullCategorical((1, 3, 2, 1, 1), 8)
    for r in range(1, 6):
        assert e_value_reduced(null.q, r, null) == pytest.approx(1.0)


def test_reduced_point_mass():
    null = NullCategorical((1, 3, 2, 1, 1), 8)
    s = [Fraction(0), Fraction(1), Fraction(0), Fraction(0), Fraction(0)]
    assert e_value_reduced(s, 2, null) == Fraction(8, 3)


def test_statistic_validation():
    with pytest.raises(InvalidStatisticError):
        e_value_generic([1.0, -1.0], 1)
    with pytest.raises(InvalidStatisticError):
        e_value_generic([1.0, math.nan], 1)
    with pytest.raises(InvalidStatisticError):
        e_value_reduced([1.0, 1.0], 1, NullCategorical((1, 1, 1), 3))
    with pytest.raises(StateError):
        e_value_generic([1.0, 1.0], 3)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=1, max_size=9))
def test_generic_mean_is_exactly_one(ints):
    s = [Fraction(v) for v in ints]
    t = len(s)
    assert sum(e_value_generic(s, r) for r in range(1, t + 1)) / t == 1


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=2, max_size=7).flatmap(
    lambda counts: st.tuples(st.just(counts), st.lists(st.integers(0, 9), min_size=len(counts), max_size=len(counts)))))
def test_reduced_null_mean_is_exactly_one(args):
    counts, ints = args
    null = NullCategorical(tuple(counts), sum(counts))
    s = [Fraction(v) for v in ints]
    mean = sum(q * e_value_reduced(s, r, null) for r, q in enumerate(null.fractions(), start=1))
    assert mean == 1


def test_process_with_unit_evalues():
    p = EProcess(alpha=0.05)
    for _ in range(100):
        p.absorb(1.0)
    assert p.log_wealth == 0.0 and not p.rejected and p.p_value == 1.0


def test_threshold_is_one_over_alpha():
    p = EProcess(alpha=0.05)
    p.absorb(19.999)
    assert not p.rejected
    p = EProcess(alpha=0.05)
    p.absorb(4.0).absorb(5.0)
    assert p.rejected and p.p_value <= 0.05


def test_zero_evalue_freezes_running_max():
    p = EProcess().absorb(2.0).absorb(0.0)
    assert p.log_wealth == -math.inf and p.wealth == 0.0
    assert p.p_value == pytest.approx(0.5)
    p.absorb(1000.0)
    assert p.wealth == 0.0 and p.p_value == pytest.approx(0.5)
    assert p.p_value_current == 1.0


def test_running_max_pvalue():
    p = EProcess().absorb(2.0)
    assert p.p_value == pytest.approx(0.5)
    p.absorb(0.25)
    assert p.p_value == pytest.approx(0.5)
    assert p.p_value_current == 1.0


def test_functional_absorb_leaves_input():
    p = EProcess()
    q = absorb(p, 3.0)
    assert p.step == 0 and q.step == 1
    assert anytime_p(q) == pytest.approx(1 / 3)


def test_invalid_evalues_and_alpha():
    for bad in (-1.0, math.nan, math.inf):
        with pytest.raises(InvalidEValueError):
            EProcess().absorb(bad)
    with pytest.raises(InvalidEValueError):
        EProcess(alpha=1.5)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 50.0), max_size=30))
def test_pvalue_is_nonincreasing_and_latch_is_consistent(evals):
    p = EProcess(alpha=0.1)
    last = 1.0
    for e in evals:
        p.absorb(e)
        assert p.p_value <= last + 1e-15
        last = p.p_value
        if p.rejected:
            assert p.p_value <= 0.1 * (1 + 1e-9)


def test_ville_bound_monte_carlo():
    # wealth of a fair betting game crosses 1/alpha with probability at most alpha
    rng = np.random.default_rng(7)
    hits, reps = 0, 4000
    for _ in range(reps):
        p = EProcess(alpha=0.1)
        for e in rng.choice([0.5, 1.5], size=200):
            p.absorb(e)
            if p.rejected:
                hits += 1
                break
    assert hits / reps <= 0.1 + 2 * math.sqrt(0.1 * 0.9 / reps)
