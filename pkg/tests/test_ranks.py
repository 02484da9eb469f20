from fractions import Fraction
from itertools import permutations
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from avrank import InvalidInputError, NullCategorical, RankHistory, StateError, null_category_probs, smoothed_rank


def _history(pre, post, seed=0):
    h = RankHistory(pre, seed=seed)
    for y in post:
        h.push(y)
    return h


def test_figure_one_history():
    h = _history([1, 2, 3, 4], [2.5, 2.7, 3.5])
    assert h.red_ranks == (3, 3, 4)
    assert h.push(2.6) == (4, 3)


def test_single_pre_value():
    assert RankHistory([5]).push(10) == (2, 2)


def test_exact_tie_is_a_fair_coin():
    hits = Counter(RankHistory([1, 2, 3], seed=s).push(2)[1] for s in range(20_000))
    assert set(hits) == {2, 3}
    assert abs(hits[2] / 20_000 - 0.5) < 0.015


def test_null_law_uniform_at_first_post_step():
    null = RankHistory(np.arange(6.0)).null()
    assert null.t == 7
    np.testing.assert_allclose(null.q, np.full(7, 1 / 7))


def test_null_law_counts_prior_slots():
    h = RankHistory([1, 2, 3, 4])
    for y in (1.5, 1.7, 2.5):
        h.push(y)
    null = null_category_probs(h)
    assert null.fractions() == [Fraction(1, 8), Fraction(3, 8), Fraction(2, 8), Fraction(1, 8), Fraction(1, 8)]


def test_null_law_time_mismatch():
    with pytest.raises(StateError):
        null_category_probs(RankHistory([1, 2]), t=5)


def test_null_categorical_validation():
    with pytest.raises(StateError):
        NullCategorical((1, 0, 2), 3)
    with pytest.raises(StateError):
        NullCategorical((1, 1), 3)


def test_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        RankHistory([1.0, float("nan")])
    with pytest.raises(InvalidInputError):
        RankHistory([1.0]).push(float("inf"))


def test_smoothed_rank_values():
    assert smoothed_rank(1, 10, 0.5) == pytest.approx(0.05)
    assert smoothed_rank(10, 10, 1e-12) == pytest.approx(1.0)


def test_smoothed_rank_uniform_under_null():
    rng = np.random.default_rng(4)
    v = []
    for _ in range(2000):
        h = RankHistory(rng.standard_normal(5), seed=rng)
        for y in rng.standard_normal(5):
            t = h.next_t
            seq, _ = h.push(y)
            v.append(smoothed_rank(seq, t, rng.random()))
    assert stats.kstest(v, "uniform").pvalue > 0.01


def test_exhaustive_permutations_match_null_law():
    # all orderings of distinct values: each reduced rank follows Cat(q) given the past
    t0, n_post = 3, 2
    joint = Counter()
    for perm in permutations(range(t0 + n_post)):
        h = RankHistory(perm[:t0])
        path = []
        for y in perm[t0:]:
            null = h.null()
            _, red = h.push(y)
            path.append((null.counts, red))
        joint[tuple(path)] += 1
    by_past = {}
    for path, n in joint.items():
        past, (counts, red) = path[:-1], path[-1]
        by_past.setdefault(past, Counter())[(counts, red)] += n
    for outcomes in by_past.values():
        total = sum(outcomes.values())
        for (counts, red), n in outcomes.items():
            assert Fraction(n, total) == Fraction(counts[red - 1], sum(counts))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=8),
       st.lists(st.floats(-100, 100), max_size=8), st.integers(0, 2**32 - 1))
def test_rank_ranges_and_slot_sums(pre, post, seed):
    h = RankHistory(pre, seed=seed)
    for y in post:
        t = h.next_t
        seq, red = h.push(y)
        assert 1 <= seq <= t
        assert 1 <= red <= len(pre) + 1
        assert red <= seq
    assert sum(h.slot_counts) == len(post)
    null = h.null()
    assert sum(null.fractions()) == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=6, unique=True),
       st.lists(st.floats(-10, 10), max_size=6, unique=True))
def test_distinct_values_need_no_tie_break(pre, post):
    post = [y for y in post if y not in pre]
    a, b = _history(pre, post, seed=1), _history(pre, post, seed=2)
    assert a.seq_ranks == b.seq_ranks and a.red_ranks == b.red_ranks
    everything = list(pre)
    for y, seq in zip(post, a.seq_ranks):
        assert seq == 1 + sum(x < y for x in everything)
        everything.append(y)


def test_reduced_from_sequential_agrees_with_push():
    rng = np.random.default_rng(0)
    h = RankHistory(rng.standard_normal(6), seed=3)
    for y in rng.standard_normal(10):
        clone = _history(h.pre, h.post, seed=3)
        seq, red = h.push(y)
        assert clone.reduced_from_sequential(seq) == red
