"""Sequential e-values and the log-scale test martingale built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from ._errors import InvalidEValueError, InvalidStatisticError, StateError
from .ranks import NullCategorical

Statistic = Union[Sequence[float], np.ndarray, Callable[[int], float]]

# Rounding slack when comparing log wealth against log(1/alpha).
LOG_SLACK = 1e-12


def _evaluate(statistic: Statistic, n: int) -> list:
    if callable(statistic):
        values = [statistic(i) for i in range(1, n + 1)]
    else:
        values = list(statistic)
        if len(values) != n:
            raise InvalidStatisticError(f"statistic has {len(values)} values, expected {n}")
    for v in values:
        if isinstance(v, Fraction):
            bad = v < 0
        else:
            bad = not math.isfinite(float(v)) or float(v) < 0
        if bad:
            raise InvalidStatisticError(f"statistic value {v!r} is negative or not finite")
    return values


def _exact(values: list) -> bool:
    """Exact arithmetic when at least one value is a Fraction and the rest are integers."""
    return any(isinstance(v, Fraction) for v in values) and all(
        isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values
    )


def e_value_generic(statistic: Statistic, rank: int, t: int | None = None):
    """``S(R_t) / mean(S(1..t))`` with ``0/0 = 1``.

    ``statistic`` is a length-``t`` sequence or a callable on ``1..t``. Fraction
    inputs give an exact Fraction result.
    """
    if t is None:
        if callable(statistic):
            raise InvalidStatisticError("t is required when the statistic is a callable")
        t = len(statistic)
    if not 1 <= rank <= t:
        raise StateError(f"rank {rank} outside 1..{t}")
    values = _evaluate(statistic, t)
    if _exact(values):
        num, total = Fraction(values[rank - 1]), Fraction(sum(values))
        if total == 0:
            return Fraction(1)
        return num * t / total
    num, total = float(values[rank - 1]), math.fsum(float(v) for v in values)
    if total == 0.0:
        return 1.0
    return num * t / total


def e_value_reduced(statistic: Statistic, reduced_rank: int, null: NullCategorical):
    """``(S~(R~_t) / q^{R~_t}) / sum(S~)`` with ``0/0 = 1``."""
    n = null.size
    if not 1 <= reduced_rank <= n:
        raise StateError(f"reduced rank {reduced_rank} outside 1..{n}")
    values = _evaluate(statistic, n)
    count = null.counts[reduced_rank - 1]
    if _exact(values):
        num, total = Fraction(values[reduced_rank - 1]), Fraction(sum(values))
        if total == 0:
            return Fraction(1)
        return num * null.t / (count * total)
    num, total = float(values[reduced_rank - 1]), math.fsum(float(v) for v in values)
    if total == 0.0:
        return 1.0
    return num * null.t / (count * total)


@dataclass
class EProcess:
    """Test martingale ``W_t = prod e_s`` kept in log space.

    ``rejected`` latches once ``W_t >= 1/alpha``. Two p-values are exposed:
    ``p_value`` uses the running maximum of the wealth and never increases,
    ``p_value_current`` is the reciprocal of the current wealth. Both satisfy
    Ville's inequality. Once rejected, ``p_value`` is at most ``alpha`` even when
    the log wealth sits a rounding error below the threshold. A zero e-value sends the wealth to 0 for good while the
    running-maximum p-value stays where it was.
    """

    alpha: float = 0.05
    log_wealth: float = 0.0
    log_wealth_max: float = 0.0
    step: int = 0
    rejected: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidEValueError(f"alpha = {self.alpha} must lie in (0, 1)")

    @property
    def threshold(self) -> float:
        return -math.log(self.alpha)

    def absorb(self, e: float) -> "EProcess":
        e = float(e)
        if math.isnan(e) or e < 0.0 or math.isinf(e):
            raise InvalidEValueError(f"e-value {e!r} must be finite and nonnegative")
        self.log_wealth += math.log(e) if e > 0.0 else -math.inf
        self.log_wealth_max = max(self.log_wealth_max, self.log_wealth)
        self.step += 1
        if self.log_wealth >= self.threshold - LOG_SLACK:
            self.rejected = True
        return self

    def copy(self) -> "EProcess":
        return replace(self)

    @property
    def wealth(self) -> float:
        return math.exp(self.log_wealth)

    @property
    def p_value(self) -> float:
        p = min(1.0, math.exp(-self.log_wealth_max))
        # keep "p <= alpha" in step with the rejection flag despite log rounding
        return min(p, self.alpha) if self.rejected else p

    @property
    def p_value_current(self) -> float:
        return min(1.0, math.exp(-self.log_wealth)) if self.log_wealth > -math.inf else 1.0


def absorb(process: EProcess, e: float) -> EProcess:
    """Return a new process with ``e`` absorbed; ``process`` is left untouched."""
    return process.copy().absorb(e)


def anytime_p(process: EProcess) -> float:
    return process.p_value
