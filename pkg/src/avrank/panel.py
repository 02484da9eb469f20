"""Interactive fixed-effects panels, DiD and synthetic-control estimates, and block means.

Unit 0 of the outcome matrix is the treated unit; units 1..N are controls.
Periods are 1-based in every public record: the blank set is ``1..T_B``, the
training set ``T_B+1..T0`` and the post-treatment periods ``T0+1..T``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.signal import lfilter

from ._errors import ConfigurationError, DataError, InvalidInputError
from .rng import as_generator
from .simplex import simplex_least_squares

PHASES = ("blank", "train", "post")


@dataclass
class IfeConfig:
    n_controls: int = 20
    t_total: int = 100
    t0: int = 50
    t_blank: int | None = None
    r_factors: int = 0
    rho_lambda: float = 0.0
    rho_eps: float = 0.0
    sigma: float = 1.0
    n_covariates: int = 0
    effect: float | Sequence[float] | Callable[[np.ndarray], np.ndarray] = 0.0
    loadings: np.ndarray | None = None
    loading_dist: str = "normal"
    seed: object = None

    def __post_init__(self):
        if self.t_blank is None:
            self.t_blank = self.t0 // 2
        if not 1 <= self.t_blank < self.t0 < self.t_total:
            raise ConfigurationError(
                f"need 1 <= T_B < T0 < T, got T_B={self.t_blank}, T0={self.t0}, T={self.t_total}"
            )
        if self.n_controls < 1:
            raise ConfigurationError("at least one control unit is required")
        for name in ("rho_lambda", "rho_eps"):
            if not -1.0 < getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must lie in (-1, 1)")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be nonnegative")
        if self.loading_dist not in ("uniform", "normal"):
            raise ConfigurationError("loading_dist must be uniform or normal")
        if self.loadings is not None:
            lo = np.asarray(self.loadings, dtype=float)
            if lo.shape != (self.n_controls + 1, self.r_factors):
                raise ConfigurationError(f"loadings must have shape {(self.n_controls + 1, self.r_factors)}")

    def effect_path(self) -> np.ndarray:
        """Treatment effect for post periods ``T0+1..T``."""
        periods = np.arange(self.t0 + 1, self.t_total + 1)
        if callable(self.effect):
            return np.asarray(self.effect(periods), dtype=float)
        eff = np.asarray(self.effect, dtype=float)
        if eff.ndim == 0:
            return np.full(periods.size, float(eff))
        if eff.shape != periods.shape:
            raise ConfigurationError(f"effect path needs {periods.size} entries")
        return eff


@dataclass
class Panel:
    outcomes: np.ndarray
    t0: int
    t_blank: int
    config: IfeConfig | None = field(default=None, repr=False)

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes, dtype=float)
        if self.outcomes.ndim != 2 or self.outcomes.shape[0] < 2:
            raise InvalidInputError("outcomes must be a (N+1) x T matrix with N >= 1")
        if not 1 <= self.t_blank < self.t0 < self.outcomes.shape[1]:
            raise ConfigurationError("need 1 <= T_B < T0 < T")

    @property
    def n_controls(self) -> int:
        return self.outcomes.shape[0] - 1

    @property
    def t_total(self) -> int:
        return self.outcomes.shape[1]

    def phase_of(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t)
        return np.where(t <= self.t_blank, "blank", np.where(t <= self.t0, "train", "post"))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["unit", "t", "y", "treated"])
            for i, row in enumerate(self.outcomes, start=1):
                for t, y in enumerate(row, start=1):
                    out.writerow([i, t, repr(float(y)), int(i == 1 and t > self.t0)])

    @classmethod
    def from_csv(cls, path, t_blank: int | None = None) -> "Panel":
        try:
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
            units = np.array([int(r["unit"]) for r in rows])
            times = np.array([int(r["t"]) for r in rows])
            ys = np.array([float(r["y"]) for r in rows])
            treated = np.array([int(r["treated"]) for r in rows])
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"{path}: expected columns unit,t,y,treated") from exc
        if units.min() != 1 or times.min() != 1:
            raise DataError(f"{path}: units and periods are numbered from 1")
        y = np.full((units.max(), times.max()), np.nan)
        y[units - 1, times - 1] = ys
        if np.isnan(y).any():
            raise DataError(f"{path}: panel is not balanced")
        first = times[(treated == 1) & (units == 1)]
        if first.size == 0:
            raise DataError(f"{path}: unit 1 is never treated")
        t0 = int(first.min()) - 1
        return cls(y, t0, t0 // 2 if t_blank is None else t_blank)


def _stationary_ar1(shape: tuple[int, int], rho: float, scale: float, rng) -> np.ndarray:
    """Rows are independent stationary AR(1) paths with marginal variance ``scale**2``."""
    n, t = shape
    if rho == 0.0:
        return scale * rng.standard_normal((n, t))
    start = scale * rng.standard_normal(n)
    innov = scale * np.sqrt(1.0 - rho * rho) * rng.standard_normal((n, t - 1))
    rest = lfilter([1.0], [1.0, -rho], innov, axis=1, zi=(rho * start)[:, None])[0]
    return np.concatenate((start[:, None], rest), axis=1)


def simulate_ife(cfg: IfeConfig, rng=None) -> Panel:
    """Draw ``Y_it = mu_i' lambda_t + theta_t' Z_i + 1[i=1, t>T0] tau_t + eps_it``.

    Factors and noise are stationary VAR(1) paths with diagonal dynamics and
    innovation variances scaled by ``1 - rho**2``. Loadings are independent
    N(0, 1) entries by default (U(0, 1) with ``loading_dist="uniform"``).
    Covariates are U(0, 1) per unit with N(0, 1) coefficients per period.
    """
    rng = as_generator(cfg.seed) if rng is None else rng
    n_units, t = cfg.n_controls + 1, cfg.t_total
    y = _stationary_ar1((n_units, t), cfg.rho_eps, cfg.sigma, rng)
    if cfg.r_factors > 0:
        lam = _stationary_ar1((cfg.r_factors, t), cfg.rho_lambda, 1.0, rng)
        if cfg.loadings is not None:
            mu = np.asarray(cfg.loadings, dtype=float)
        elif cfg.loading_dist == "uniform":
            mu = rng.random((n_units, cfg.r_factors))
        else:
            mu = rng.standard_normal((n_units, cfg.r_factors))
        y += mu @ lam
    if cfg.n_covariates > 0:
        z = rng.random((n_units, cfg.n_covariates))
        theta = rng.standard_normal((cfg.n_covariates, t))
        y += z @ theta
    y[0, cfg.t0:] += cfg.effect_path()
    return Panel(y, cfg.t0, cfg.t_blank, cfg)


@dataclass
class Estimates:
    """Treatment estimates indexed by period, each tagged blank, train or post."""

    t: np.ndarray
    tau_hat: np.ndarray
    phase: np.ndarray

    def select(self, phase: str) -> np.ndarray:
        return self.tau_hat[self.phase == phase]

    @property
    def blank(self) -> np.ndarray:
        return self.select("blank")

    @property
    def post(self) -> np.ndarray:
        return self.select("post")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "tau_hat", "phase"])
            for t, v, p in zip(self.t, self.tau_hat, self.phase):
                out.writerow([int(t), repr(float(v)), p])

    @classmethod
    def from_csv(cls, path) -> "Estimates":
        try:
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
            t = np.array([int(r["t"]) for r in rows])
            v = np.array([float(r["tau_hat"]) for r in rows])
            ph = np.array([r["phase"] for r in rows])
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"{path}: expected columns t,tau_hat,phase") from exc
        if not set(ph) <= set(PHASES):
            raise DataError(f"{path}: phase must be one of {PHASES}")
        return cls(t, v, ph)


def _estimates(panel: Panel, tau: np.ndarray) -> Estimates:
    t = np.arange(1, panel.t_total + 1)
    return Estimates(t, tau, panel.phase_of(t))


def did_estimates(panel: Panel) -> Estimates:
    """Double differences ``(Y_1t - mean_controls_t) - (mean over training of the same gap)``."""
    train = slice(panel.t_blank, panel.t0)
    if panel.t0 <= panel.t_blank:
        raise ConfigurationError("the training set is empty")
    y = panel.outcomes
    gap = y[0] - y[1:].mean(axis=0)
    level = y[0, train].mean() - y[1:, train].mean()
    return _estimates(panel, gap - level)


def scm_weights(panel: Panel, characteristics=None, v_diag=None, tol: float = 1e-8,
                max_iter: int = 10_000) -> np.ndarray:
    """Synthetic-control weights on the simplex.

    ``characteristics`` is a ``K x (N+1)`` matrix (column 0 for the treated unit);
    by default it holds the training-period outcomes and ``v_diag`` is all ones.
    """
    if characteristics is None:
        x = panel.outcomes[:, panel.t_blank:panel.t0].T
    else:
        x = np.asarray(characteristics, dtype=float)
        if x.ndim != 2 or x.shape[1] != panel.n_controls + 1:
            raise InvalidInputError(f"characteristics must have {panel.n_controls + 1} columns")
    if panel.n_controls == 1:
        return np.ones(1)
    return simplex_least_squares(x[:, 1:], x[:, 0], v_diag, tol=tol, max_iter=max_iter).weights


def scm_estimates(panel: Panel, weights) -> Estimates:
    w = np.asarray(weights, dtype=float)
    if w.shape != (panel.n_controls,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-8:
        raise InvalidInputError("weights must lie on the simplex")
    y = panel.outcomes
    return _estimates(panel, y[0] - w @ y[1:])


def block_means(values, block_size: int, strict: bool = True) -> np.ndarray:
    """Means of consecutive blocks; a trailing partial block is an error when ``strict``."""
    v = np.asarray(values, dtype=float)
    if block_size < 1:
        raise ConfigurationError("block size must be at least 1")
    n = v.shape[-1] // block_size
    if strict and v.shape[-1] % block_size:
        raise ConfigurationError(f"{v.shape[-1]} values do not split into blocks of {block_size}")
    return v[..., : n * block_size].reshape(v.shape[:-1] + (n, block_size)).mean(axis=-1)


def block_aggregate(estimates: Estimates, block_size: int) -> Estimates:
    """Block the blank and post estimates separately; incomplete post blocks are dropped.

    The returned ``t`` is the last period of each block, i.e. the time at which
    the block's decision can be taken.
    """
    out_t, out_v, out_p = [], [], []
    for phase in ("blank", "post"):
        mask = estimates.phase == phase
        means = block_means(estimates.tau_hat[mask], block_size, strict=phase == "blank")
        ends = estimates.t[mask][block_size - 1::block_size][: means.size]
        out_t.append(ends)
        out_v.append(means)
        out_p.append(np.full(means.size, phase))
    return Estimates(np.concatenate(out_t), np.concatenate(out_v), np.concatenate(out_p))
