"""Streaming rank test: history, statistic producer and test martingale in one object."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .alternatives.base import StatisticStrategy
from .eprocess import EProcess
from .ranks import RankHistory


@dataclass(frozen=True)
class StepReport:
    t: int
    seq_rank: int
    red_rank: int
    e_value: float
    log_wealth: float
    p_value: float
    rejected: bool


class SequentialRankTest:
    """Anytime-valid test of exchangeability between a pre batch and a post stream.

    >>> from avrank.alternatives import GaussianReducedStatistic
    >>> test = SequentialRankTest([0.1, -0.4, 0.3], GaussianReducedStatistic(1.0, 2000, seed=1), seed=2)
    >>> report = test.step(2.5)
    >>> report.red_rank
    4
    """

    def __init__(self, pre: Iterable[float], strategy: StatisticStrategy, alpha: float = 0.05, seed=None):
        self.history = RankHistory(pre, seed=seed)
        self.strategy = strategy
        self.process = EProcess(alpha=alpha)

    def step(self, y: float) -> StepReport:
        t = self.history.next_t
        null = self.history.null()
        values = self.strategy.statistic(self.history)
        seq, red = self.history.push(y)
        e = self.strategy.e_value(values, seq, red, null, t)
        self.strategy.update(self.history, seq, red, t)
        self.process.absorb(e)
        p = self.process
        return StepReport(t, seq, red, e, p.log_wealth, p.p_value, p.rejected)

    def run(self, ys: Iterable[float]) -> list[StepReport]:
        return [self.step(y) for y in ys]

    @property
    def p_value(self) -> float:
        return self.process.p_value

    @property
    def rejected(self) -> bool:
        return self.process.rejected
