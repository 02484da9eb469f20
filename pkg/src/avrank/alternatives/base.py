"""Interface shared by every statistic producer.

A producer is asked for the next statistic *before* the new observation is
pushed, and only afterwards learns the revealed ranks. That ordering is what
makes every e-value predictable.
"""
from __future__ import annotations

import numpy as np

from ..eprocess import e_value_generic, e_value_reduced
from ..ranks import NullCategorical, RankHistory


class StatisticStrategy:
    """Base producer. Subclasses override ``statistic`` and usually ``update``."""

    reduced: bool = True

    def statistic(self, history: RankHistory):
        raise NotImplementedError

    def e_value(self, values, seq_rank: int, red_rank: int, null: NullCategorical, t: int) -> float:
        if self.reduced:
            return float(e_value_reduced(values, red_rank, null))
        return float(e_value_generic(values, seq_rank, t))

    def update(self, history: RankHistory, seq_rank: int, red_rank: int, t: int) -> None:
        """Hook called after the ranks at time ``t`` are revealed."""


class UniformStatistic(StatisticStrategy):
    """Constant statistic; every e-value equals one."""

    def __init__(self, reduced: bool = True):
        self.reduced = reduced

    def statistic(self, history: RankHistory) -> np.ndarray:
        n = history.t0 + 1 if self.reduced else history.next_t
        return np.ones(n)
