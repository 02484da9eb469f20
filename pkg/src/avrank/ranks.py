"""Sequential ranks, reduced ranks and their null laws.

Time is 1-based throughout: the pre-treatment batch occupies t = 1..T0 and the
first post-treatment observation arrives at t = T0 + 1.

Ties are broken by attaching an independent uniform key to every observation
(drawn from the history's own generator) and comparing ``(value, key)`` pairs
lexicographically. This is the limit of adding infinitesimal continuous noise,
so exchangeable inputs stay exchangeable and every rank is well defined.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._errors import InvalidInputError, StateError
from .rng import as_generator


def _finite(y) -> float:
    try:
        v = float(y)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"observation {y!r} is not a real number") from exc
    if not np.isfinite(v):
        raise InvalidInputError(f"observation {y!r} is not finite")
    return v


class RankHistory:
    """Observation stream split into a fixed pre-treatment batch and a growing post stream.

    ``push`` returns the sequential rank ``R_t`` (position among every earlier
    observation) and the reduced rank ``R~_t`` (position among the pre-treatment
    batch only). Slot counts of the reduced ranks are kept so the null law of the
    next reduced rank is available in O(T0).
    """

    def __init__(self, pre: Iterable[float], seed=None):
        pre = [_finite(y) for y in pre]
        if not pre:
            raise InvalidInputError("the pre-treatment batch must contain at least one observation")
        self._rng = as_generator(seed)
        keys = self._rng.random(len(pre))
        self._pre = tuple(pre)
        self._post: list[float] = []
        self._seq: list[int] = []
        self._red: list[int] = []
        self._pre_sorted = sorted(zip(pre, keys.tolist()))
        # every observation so far, with a flag marking pre-treatment entries
        self._all_sorted = sorted((y, k, True) for y, k in zip(pre, keys.tolist()))
        self._slots = [0] * (len(pre) + 1)

    @property
    def pre(self) -> tuple[float, ...]:
        return self._pre

    @property
    def post(self) -> tuple[float, ...]:
        return tuple(self._post)

    @property
    def seq_ranks(self) -> tuple[int, ...]:
        return tuple(self._seq)

    @property
    def red_ranks(self) -> tuple[int, ...]:
        return tuple(self._red)

    @property
    def t0(self) -> int:
        return len(self._pre)

    @property
    def n_post(self) -> int:
        return len(self._post)

    @property
    def next_t(self) -> int:
        """Time index the next pushed observation will receive."""
        return self.t0 + len(self._post) + 1

    @property
    def slot_counts(self) -> tuple[int, ...]:
        """How many post observations landed in each reduced-rank slot so far."""
        return tuple(self._slots)

    def reduced_from_sequential(self, seq_rank: int) -> int:
        """Reduced rank implied by a sequential rank, given the current (pre-push) history."""
        t = self.next_t
        if not 1 <= seq_rank <= t:
            raise InvalidInputError(f"sequential rank {seq_rank} outside 1..{t}")
        below = self._all_sorted[: seq_rank - 1]
        return 1 + sum(1 for _, _, is_pre in below if is_pre)

    def push(self, y: float) -> tuple[int, int]:
        """Append a post-treatment observation and return ``(R_t, R~_t)``."""
        y = _finite(y)
        key = float(self._rng.random())
        red = bisect.bisect_left(self._pre_sorted, (y, key)) + 1
        seq = bisect.bisect_left(self._all_sorted, (y, key, False)) + 1
        self._all_sorted.insert(seq - 1, (y, key, False))
        self._post.append(y)
        self._seq.append(seq)
        self._red.append(red)
        self._slots[red - 1] += 1
        return seq, red

    def null(self) -> "NullCategorical":
        """Null law of the reduced rank of the next observation."""
        return NullCategorical.from_slots(self._slots)


@dataclass(frozen=True)
class NullCategorical:
    """Null law of a reduced rank: ``q^i = counts[i] / t`` with ``counts[i] = 1 + slot hits``."""

    counts: tuple[int, ...]
    t: int

    def __post_init__(self):
        if any(c < 1 for c in self.counts):
            raise StateError("null slot counts must be positive")
        if sum(self.counts) != self.t:
            raise StateError(f"slot counts sum to {sum(self.counts)}, expected t = {self.t}")

    @classmethod
    def from_slots(cls, slots: Sequence[int]) -> "NullCategorical":
        counts = tuple(1 + int(s) for s in slots)
        return cls(counts, sum(counts))

    @property
    def size(self) -> int:
        return len(self.counts)

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.t

    def fractions(self) -> list[Fraction]:
        return [Fraction(c, self.t) for c in self.counts]

    def edges(self) -> np.ndarray:
        """Cumulative probabilities ``0 = c_0 < c_1 < ... < c_{T0+1} = 1``, exact at both ends."""
        return np.concatenate(([0], np.cumsum(self.counts))) / self.t


def null_category_probs(history: RankHistory, t: int | None = None) -> NullCategorical:
    """Null law ``Cat(q_t)`` of ``R~_t`` given the reduced ranks already in ``history``."""
    if t is not None and t != history.next_t:
        raise StateError(
            f"history holds {history.n_post} post observations, so the next time is "
            f"{history.next_t}, not {t}"
        )
    return history.null()


def smoothed_rank(rank: int, t: int, u: float) -> float:
    """Rescaled rank ``(R_t - u) / t`` in (0, 1), smoothed by an independent uniform ``u``."""
    if not 0.0 < u < 1.0:
        raise InvalidInputError(f"smoothing offset u = {u} must lie strictly inside (0, 1)")
    if not 1 <= rank <= t:
        raise InvalidInputError(f"rank {rank} outside 1..{t}")
    return (rank - u) / t
