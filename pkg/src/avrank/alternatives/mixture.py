"""Mixtures over candidate statistics.

In adaptive mode the mixture wealth is the plain average of the candidates'
wealths, so the mixture e-value is the wealth-weighted average of the
candidate e-values and the log-regret against the best candidate never
exceeds ``log k``. In average mode every step takes the unweighted mean of the
candidate e-values.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .._errors import ConfigurationError, InvalidEValueError
from ..ranks import RankHistory
from .base import StatisticStrategy

DEFAULT_MULTIPLIERS = (0.25, 0.5, 1.0, 2.0, 4.0)
MODES = ("adaptive", "average")


@dataclass(frozen=True)
class MixtureState:
    log_wealths: np.ndarray
    mode: str = "adaptive"
    log_mixture_wealth: float = 0.0

    @classmethod
    def start(cls, k: int, mode: str = "adaptive") -> "MixtureState":
        if k < 1:
            raise ConfigurationError("a mixture needs at least one candidate")
        if mode not in MODES:
            raise ConfigurationError(f"unknown mixture mode {mode!r}")
        return cls(np.zeros(k), mode, 0.0)

    @property
    def k(self) -> int:
        return self.log_wealths.size

    def weights(self) -> np.ndarray:
        """Current weight of each candidate in the next mixture e-value."""
        if self.mode == "average" or np.all(np.isneginf(self.log_wealths)):
            return np.full(self.k, 1.0 / self.k)
        return np.exp(self.log_wealths - logsumexp(self.log_wealths))

    def regret(self) -> float:
        """``max_j log W^j - log W~``; bounded by ``log k`` in adaptive mode."""
        return float(np.max(self.log_wealths) - self.log_mixture_wealth)


def mixture_step(state: MixtureState, candidate_evalues) -> tuple[float, MixtureState]:
    e = np.asarray(candidate_evalues, dtype=float)
    if e.shape != (state.k,):
        raise ConfigurationError(f"expected {state.k} candidate e-values, got shape {e.shape}")
    if np.any(np.isnan(e) | (e < 0) | np.isinf(e)):
        raise InvalidEValueError("candidate e-values must be finite and nonnegative")
    with np.errstate(divide="ignore"):
        log_e = np.log(e)
    log_wealths = state.log_wealths + log_e
    if state.mode == "adaptive":
        new_total = float(logsumexp(log_wealths) - np.log(state.k))
        if np.isneginf(state.log_mixture_wealth):
            e_mix = 1.0
        else:
            e_mix = float(np.dot(state.weights(), e))
    else:
        e_mix = float(e.mean())
        new_total = state.log_mixture_wealth + (np.log(e_mix) if e_mix > 0 else -np.inf)
    return e_mix, replace(state, log_wealths=log_wealths, log_mixture_wealth=new_total)


class MixtureStatistic(StatisticStrategy):
    """Combine several producers of the same kind into one e-value per step."""

    def __init__(self, candidates, mode: str = "adaptive"):
        candidates = list(candidates)
        if not candidates:
            raise ConfigurationError("a mixture needs at least one candidate")
        kinds = {c.reduced for c in candidates}
        if len(kinds) != 1:
            raise ConfigurationError("mixture candidates must all be reduced or all generic")
        self.reduced = kinds.pop()
        self.candidates = candidates
        self.state = MixtureState.start(len(candidates), mode)

    def statistic(self, history: RankHistory):
        return [c.statistic(history) for c in self.candidates]

    def e_value(self, values, seq_rank, red_rank, null, t):
        evals = [c.e_value(v, seq_rank, red_rank, null, t) for c, v in zip(self.candidates, values)]
        e_mix, self.state = mixture_step(self.state, evals)
        return e_mix

    def update(self, history, seq_rank, red_rank, t):
        for c in self.candidates:
            c.update(history, seq_rank, red_rank, t)
