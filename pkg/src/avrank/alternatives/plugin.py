"""Plug-in statistics from a kernel density estimate of smoothed ranks.

Past smoothed ranks ``V_s`` live in (0, 1). The density is estimated with a
Gaussian kernel on the reflected sample ``{-V_s, V_s, 2 - V_s}`` and then
renormalised so it integrates to exactly one on [0, 1]. The generic statistic
evaluates that density at ``(r - u_t) / t``; the reduced statistic assigns each
reduced-rank slot the CDF mass of its null interval.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .._errors import InvalidInputError
from ..ranks import NullCategorical, RankHistory, smoothed_rank
from ..rng import as_generator
from .base import StatisticStrategy

MIN_BANDWIDTH = 0.05
_SQRT_2PI = np.sqrt(2.0 * np.pi)


def reflected_quantiles(v: np.ndarray, probs) -> np.ndarray:
    """Quantiles (linear interpolation) of ``{-v, v, 2 - v}`` for ``v`` in [0, 1].

    The reflected sample sorts as ``-v`` descending, then ``v``, then ``2 - v``
    descending, so every order statistic is a known order statistic of ``v``.
    """
    v = np.sort(np.asarray(v, dtype=float))
    n = v.size
    out = []
    for p in np.atleast_1d(probs):
        pos = p * (3 * n - 1)
        lo = int(np.floor(pos))
        hi = min(lo + 1, 3 * n - 1)
        out.append(_reflected_order(v, lo) + (pos - lo) * (_reflected_order(v, hi) - _reflected_order(v, lo)))
    return np.array(out)


def _reflected_order(v_sorted: np.ndarray, k: int) -> float:
    n = v_sorted.size
    if k < n:
        return -v_sorted[n - 1 - k]
    if k < 2 * n:
        return v_sorted[k - n]
    return 2.0 - v_sorted[3 * n - 1 - k]


def silverman_bandwidth(v, floor: float = MIN_BANDWIDTH) -> float:
    """Silverman's rule on the reflected sample, floored at ``floor``."""
    v = np.asarray(v, dtype=float)
    n = v.size
    if n == 0:
        return floor
    ext = np.concatenate((-v, v, 2.0 - v))
    sd = ext.std(ddof=1)
    q25, q75 = reflected_quantiles(v, (0.25, 0.75))
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    return max(floor, 0.9 * spread * ext.size ** (-0.2))


class ReflectedKDE:
    """Gaussian-kernel density on [0, 1] from a reflected sample, normalised to unit mass."""

    def __init__(self, samples, bandwidth: float | None = None, floor: float = MIN_BANDWIDTH):
        v = np.asarray(samples, dtype=float)
        if v.size == 0:
            raise InvalidInputError("at least one sample is required")
        if np.any((v < 0) | (v > 1)):
            raise InvalidInputError("smoothed ranks must lie in [0, 1]")
        self.samples = v
        self.bandwidth = silverman_bandwidth(v, floor) if bandwidth is None else float(bandwidth)
        self._points = np.concatenate((-v, v, 2.0 - v))
        h = self.bandwidth
        self._mass = np.mean(ndtr((1.0 - self._points) / h) - ndtr(-self._points / h))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self._points) / self.bandwidth
        dens = np.exp(-0.5 * z * z).mean(axis=-1) / (_SQRT_2PI * self.bandwidth)
        return np.where((x >= 0) & (x <= 1), dens / self._mass, 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        h = self.bandwidth
        raw = (ndtr((x[..., None] - self._points) / h) - ndtr(-self._points / h)).mean(axis=-1)
        return raw / self._mass


@dataclass
class PluginState:
    """Smoothed ranks seen so far plus the generator that draws the smoothing offsets.

    ``init_statistic`` (length ``T0 + 1``) is used at the first post step, when no
    smoothed rank exists yet; without it that step is uniform.
    """

    seed: object = None
    init_statistic: np.ndarray | None = None
    floor: float = MIN_BANDWIDTH
    samples: list = field(default_factory=list)

    def __post_init__(self):
        self._rng = as_generator(self.seed)
        self._pending: tuple[int, float] | None = None
        if self.init_statistic is not None:
            self.init_statistic = np.asarray(self.init_statistic, dtype=float)

    @property
    def bandwidth(self) -> float:
        return silverman_bandwidth(self.samples, self.floor)

    def kde(self) -> ReflectedKDE | None:
        return ReflectedKDE(self.samples, floor=self.floor) if self.samples else None

    def offset(self, t: int) -> float:
        """Smoothing offset ``u_t``, drawn once per time step."""
        if self._pending is None or self._pending[0] != t:
            u = float(self._rng.random())
            while u == 0.0:
                u = float(self._rng.random())
            self._pending = (t, u)
        return self._pending[1]

    def record(self, seq_rank: int, t: int) -> float:
        """Store ``V_t`` built from the revealed sequential rank and this step's offset."""
        v = smoothed_rank(seq_rank, t, self.offset(t))
        self.samples.append(v)
        self._pending = None
        return v


def plugin_statistic_generic(state: PluginState, t: int) -> np.ndarray:
    """``S_t(r) = f(r - u_t) / t`` for ``r = 1..t``; pair with a unit denominator."""
    kde = state.kde()
    if kde is None:
        if state.init_statistic is not None and state.init_statistic.size == t:
            s = state.init_statistic
            return s * t / s.sum()
        return np.ones(t)
    u = state.offset(t)
    return kde.pdf((np.arange(1, t + 1) - u) / t)


def plugin_statistic_reduced(state: PluginState, null: NullCategorical) -> np.ndarray:
    """Mass of the estimated rank density over each null interval; sums to one."""
    kde = state.kde()
    if kde is None:
        if state.init_statistic is not None:
            s = state.init_statistic
            return s / s.sum()
        return null.q
    cdf = kde.cdf(null.edges())
    cdf[0], cdf[-1] = 0.0, 1.0
    return np.maximum(np.diff(cdf), 0.0)


class PluginReducedStatistic(StatisticStrategy):
    """Reduced-rank plug-in producer."""

    reduced = True

    def __init__(self, seed=None, init_statistic=None, floor: float = MIN_BANDWIDTH):
        self.state = PluginState(seed=seed, init_statistic=init_statistic, floor=floor)

    def statistic(self, history: RankHistory) -> np.ndarray:
        return plugin_statistic_reduced(self.state, history.null())

    def update(self, history, seq_rank, red_rank, t):
        self.state.record(seq_rank, t)


class PluginGenericStatistic(StatisticStrategy):
    """Sequential-rank plug-in producer, scored with a unit denominator."""

    reduced = False

    def __init__(self, seed=None, init_statistic=None, floor: float = MIN_BANDWIDTH):
        self.state = PluginState(seed=seed, init_statistic=init_statistic, floor=floor)

    def statistic(self, history: RankHistory) -> np.ndarray:
        return plugin_statistic_generic(self.state, history.next_t)

    def e_value(self, values, seq_rank, red_rank, null, t):
        # density at the smoothed rank; its mean over (R_t, u_t) is one under the null
        return float(values[seq_rank - 1])

    def update(self, history, seq_rank, red_rank, t):
        self.state.record(seq_rank, t)
