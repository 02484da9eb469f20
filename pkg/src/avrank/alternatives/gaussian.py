"""Statistics that are log-optimal against a Gaussian location shift.

Under the alternative, pre-treatment outcomes are N(0, 1) and post-treatment
outcomes are N(delta, 1) with ``delta`` the effect size in noise units. Ranks
are invariant to a common location and scale, so ``delta`` is the only input.

``gaussian_statistic_reduced`` integrates the slot probabilities of the next
reduced rank over the unknown pre-treatment order statistics by Monte Carlo,
entirely in log space. ``gaussian_statistic_generic`` estimates the conditional
law of the next sequential rank by simulating outcome paths and keeping those
whose past ranks match the observed ones.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import erf, log_ndtr, logsumexp, ndtr
from scipy.stats import binom

from .._errors import ConfigurationError, InvalidInputError
from ..ranks import RankHistory
from ..rng import as_generator
from .base import StatisticStrategy

log = logging.getLogger(__name__)


@dataclass
class GaussianAltConfig:
    effect_size: float
    mc_draws: int = 10_000
    seed: object = None
    mu_path: Sequence[float] | None = None

    def __post_init__(self):
        if int(self.mc_draws) < 1:
            raise ConfigurationError("mc_draws must be at least 1")
        if not np.isfinite(self.effect_size):
            raise ConfigurationError("effect_size must be finite")

    def effect_path(self, n_post: int) -> np.ndarray:
        """Effect sizes for post steps 1..n_post."""
        if self.mu_path is None:
            return np.full(n_post, float(self.effect_size))
        path = np.asarray(self.mu_path, dtype=float)
        if path.size < n_post:
            raise ConfigurationError(f"mu_path covers {path.size} post steps, {n_post} needed")
        return path[:n_post]


def log_ndtr_diff(a, b):
    """``log(Phi(b) - Phi(a))`` for ``a <= b``, accurate in both tails."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(a.shape)
    lower = b <= 0
    upper = a >= 0
    mid = ~(lower | upper)
    with np.errstate(divide="ignore", invalid="ignore"):
        la, lb = log_ndtr(a[lower]), log_ndtr(b[lower])
        out[lower] = lb + np.log1p(-np.exp(la - lb))
        ua, ub = log_ndtr(-a[upper]), log_ndtr(-b[upper])
        out[upper] = ua + np.log1p(-np.exp(ub - ua))
        s = np.sqrt(0.5)
        out[mid] = np.log(0.5 * (erf(b[mid] * s) - erf(a[mid] * s)))
    return out


def log_slot_probs(sorted_pre, delta: float) -> np.ndarray:
    """Log probability that a N(delta, 1) draw lands in each gap of sorted pre draws.

    ``sorted_pre`` has shape ``(..., T0)``; the result has shape ``(..., T0 + 1)``.
    Gap masses are differenced in whichever tail keeps them accurate; the few
    that are too small for that are recomputed fully in log space.
    """
    x = np.asarray(sorted_pre, dtype=float) - delta
    pad = np.full(x.shape[:-1] + (1,), np.inf)
    a = np.concatenate((-pad, x), axis=-1)
    b = np.concatenate((x, pad), axis=-1)
    lower = ndtr(np.concatenate((-pad, x, pad), axis=-1))
    upper = ndtr(-np.concatenate((-pad, x, pad), axis=-1))
    lo_a, lo_b = lower[..., :-1], lower[..., 1:]
    up_a, up_b = upper[..., :-1], upper[..., 1:]
    mass = np.where(b <= 0, lo_b - lo_a, np.where(a >= 0, up_a - up_b, 1.0 - lo_a - up_b))
    with np.errstate(divide="ignore"):
        out = np.log(mass)
    fragile = mass < 1e-200
    if fragile.any():
        out[fragile] = log_ndtr_diff(a[fragile], b[fragile])
    return out


def _normalise_log(log_s: np.ndarray) -> np.ndarray:
    return np.exp(log_s - logsumexp(log_s))


def gaussian_statistic_reduced(cfg: GaussianAltConfig, observed_red_ranks: Sequence[int], t0: int,
                               rng=None) -> np.ndarray:
    """Monte Carlo estimate of the next reduced rank's law under the Gaussian alternative.

    Returns a probability vector over ``1..T0+1``.
    """
    rng = as_generator(cfg.seed) if rng is None else rng
    obs = np.asarray(observed_red_ranks, dtype=int)
    if obs.size and (obs.min() < 1 or obs.max() > t0 + 1):
        raise InvalidInputError("observed reduced ranks must lie in 1..T0+1")
    x = np.sort(rng.standard_normal((int(cfg.mc_draws), t0)), axis=1)
    lg = log_slot_probs(x, cfg.effect_size)
    counts = np.bincount(obs - 1, minlength=t0 + 1).astype(float)
    base = lg @ counts
    return _normalise_log(logsumexp(base[:, None] + lg, axis=0))


def decorrelate(y, rho: float):
    """Divide outcomes by ``sqrt(1 - rho**2)``, the effect-size rescaling for equicorrelated noise."""
    if not -1.0 < rho < 1.0:
        raise InvalidInputError("rho must lie in (-1, 1)")
    return np.asarray(y, dtype=float) / np.sqrt(1.0 - rho * rho)


def first_step_rank_probs(t0: int, delta: float, grid: int = 4001) -> np.ndarray:
    """Exact law of the rank of one N(delta, 1) draw among ``t0`` N(0, 1) draws.

    One-dimensional integral of the binomial slot probability against the
    shifted normal density, done by the trapezoid rule on a wide grid.
    """
    y = np.linspace(delta - 12.0, delta + 12.0, grid)
    w = np.exp(-0.5 * (y - delta) ** 2) / np.sqrt(2 * np.pi)
    pmf = binom.pmf(np.arange(t0 + 1)[:, None], t0, ndtr(y)[None, :])
    p = trapezoid(pmf * w, y, axis=1)
    return p / p.sum()


class GaussianReducedStatistic(StatisticStrategy):
    """Reduced-rank producer that keeps one fixed set of Monte Carlo pre draws.

    The draws are independent of the data, so reusing them across steps keeps
    the statistic predictable; each revealed reduced rank adds its log slot
    probability to a per-draw log weight, which equals recomputing the product
    over all observed slots from scratch.
    """

    reduced = True

    def __init__(self, effect_size: float, mc_draws: int = 10_000, seed=None):
        self.cfg = GaussianAltConfig(effect_size, mc_draws, seed)
        self._rng = as_generator(seed)
        self._log_slots = None
        self._log_weights = None

    def _ensure(self, t0: int):
        if self._log_slots is None:
            x = np.sort(self._rng.standard_normal((int(self.cfg.mc_draws), t0)), axis=1)
            self._log_slots = log_slot_probs(x, self.cfg.effect_size)
            self._log_weights = np.zeros(x.shape[0])

    def statistic(self, history: RankHistory) -> np.ndarray:
        self._ensure(history.t0)
        return _normalise_log(logsumexp(self._log_weights[:, None] + self._log_slots, axis=0))

    def update(self, history, seq_rank, red_rank, t):
        self._ensure(history.t0)
        self._log_weights = self._log_weights + self._log_slots[:, red_rank - 1]


def gaussian_statistic_generic(cfg: GaussianAltConfig, observed_ranks: Sequence[int], t: int, t0: int,
                               rng=None, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
    """Estimated law of ``R_t`` given the observed sequential ranks ``R_{T0+1..t-1}``.

    Simulates ``mc_draws`` outcome paths, keeps those whose earlier sequential
    ranks equal ``observed_ranks`` and tabulates their rank at ``t`` with add-one
    smoothing. ``loc`` and ``scale`` shift all simulated outcomes and leave the
    result unchanged. With no matching path the statistic falls back to uniform.
    """
    rng = as_generator(cfg.seed) if rng is None else rng
    obs = np.asarray(observed_ranks, dtype=int)
    if obs.size != t - t0 - 1:
        raise InvalidInputError(f"expected {t - t0 - 1} observed ranks for t = {t}, got {obs.size}")
    if scale <= 0:
        raise InvalidInputError("scale must be positive")
    z = rng.standard_normal((int(cfg.mc_draws), t))
    z[:, t0:] += cfg.effect_path(t - t0)
    y = loc + scale * z
    keep = np.arange(y.shape[0])
    for k, s in enumerate(range(t0, t - 1)):
        ys = y[keep]
        r = 1 + (ys[:, :s] < ys[:, s:s + 1]).sum(axis=1)
        keep = keep[r == obs[k]]
        if keep.size == 0:
            log.warning("no simulated path matches the observed rank prefix at t = %d; using a uniform statistic", t)
            return np.ones(t)
    ys = y[keep]
    r = 1 + (ys[:, : t - 1] < ys[:, t - 1:t]).sum(axis=1)
    counts = np.bincount(r - 1, minlength=t)
    return (counts + 1.0) / (counts.sum() + t)


class GaussianGenericStatistic(StatisticStrategy):
    """Sequential-rank producer; simulates fresh paths at every step."""

    reduced = False

    def __init__(self, effect_size: float, mc_draws: int = 10_000, seed=None, mu_path=None):
        self.cfg = GaussianAltConfig(effect_size, mc_draws, seed, mu_path)
        self._rng = as_generator(seed)

    def statistic(self, history: RankHistory) -> np.ndarray:
        return gaussian_statistic_generic(self.cfg, history.seq_ranks, history.next_t, history.t0, rng=self._rng)
