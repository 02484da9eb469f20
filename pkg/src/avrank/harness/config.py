"""Experiment configuration and its flat ``key = value`` file format.

Example file::

    # null size of the anytime-valid tests, DiD estimator
    scenario = did-iid
    t0 = 50
    horizon = 1000
    tests = av_gaussian, av_plugin
    replications = 2000
    kde_bins = 512          # binned KDE keeps 1000-step runs fast

Lines starting with ``#`` and trailing ``# ...`` comments are ignored. Lists
are comma separated. Unknown keys are configuration errors.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import re
from dataclasses import dataclass
from math import sqrt
from pathlib import Path

from .._errors import ConfigurationError

SCENARIOS = ("did-iid", "scm-var1", "dynamic-effect")
BASE_TAGS = ("fixed_t", "repeated_fixed_t", "av_gaussian", "av_plugin", "av_plugin_generic",
             "mix_adaptive", "mix_average")
_MULTIPLIER_TAG = re.compile(r"^av_gaussian_x(\d+(?:\.\d+)?)$")


def gaussian_multiplier(tag: str) -> float | None:
    """Effect-size multiplier of an ``av_gaussian`` style tag, or None for other tags."""
    if tag == "av_gaussian":
        return 1.0
    m = _MULTIPLIER_TAG.match(tag)
    return float(m.group(1)) if m else None


@dataclass
class ExperimentConfig:
    scenario: str = "did-iid"
    estimator: str | None = None
    n_controls: int = 20
    t0: int = 50
    t_blank: int | None = None
    horizon: int = 20
    r_factors: int | None = None
    rho_lambda: float = 0.0
    rho_eps: float = 0.0
    sigma: float = 1.0
    n_covariates: int = 0
    loading_dist: str = "normal"
    effect: float | None = None
    effect_slope: float | None = None
    block_size: int = 1
    tests: tuple[str, ...] = ("fixed_t", "repeated_fixed_t", "av_gaussian", "av_plugin")
    fixed_t_horizon: int | None = None
    fixed_t_max_steps: int | None = None
    fixed_t_sided: str = "one"
    fixed_t_exact_limit: int = 1_000_000
    fixed_t_draws: int = 10_000
    alt_effect: float | None = None
    gaussian_effect: float | None = None
    mc_draws: int = 1000
    mixture_multipliers: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    kde_bins: int = 0
    replications: int = 500
    alpha: float = 0.05
    master_seed: int = 0
    chunk_size: int = 100

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"scenario must be one of {SCENARIOS}, not {self.scenario!r}")
        dynamic = self.scenario == "dynamic-effect"
        if self.estimator is None:
            self.estimator = "did" if self.scenario == "did-iid" else "scm"
        if self.estimator not in ("did", "scm"):
            raise ConfigurationError(f"estimator must be did or scm, not {self.estimator!r}")
        if self.r_factors is None:
            self.r_factors = 0 if self.scenario == "did-iid" else 3
        if self.t_blank is None:
            self.t_blank = self.t0 // 2
        if self.effect is None:
            self.effect = 1.0 if dynamic else 0.0
        if self.effect_slope is None:
            self.effect_slope = 1.0 / 15.0 if dynamic else 0.0
        self.tests = tuple(self.tests)
        self.mixture_multipliers = tuple(float(c) for c in self.mixture_multipliers)
        self.validate()

    # derived quantities -------------------------------------------------
    @property
    def n_blank_blocks(self) -> int:
        return self.t_blank // self.block_size

    @property
    def n_post_blocks(self) -> int:
        return self.horizon // self.block_size

    @property
    def fixed_steps(self) -> int:
        """Number of post blocks for which fixed-horizon p-values are computed."""
        if self.fixed_t_max_steps is not None:
            return min(self.fixed_t_max_steps, self.n_post_blocks)
        return min(self.n_post_blocks, max(30, self.single_fixed_step))

    @property
    def single_fixed_step(self) -> int:
        return self.fixed_t_horizon if self.fixed_t_horizon is not None else min(12, self.n_post_blocks)

    def nominal_effect(self) -> float:
        """Treatment size the Gaussian alternative is tuned to, in outcome units."""
        if self.alt_effect is not None:
            return self.alt_effect
        if self.effect != 0.0:
            return self.effect
        return 1.5 if self.estimator == "did" else 2.0

    def effect_size(self) -> float:
        """Effect size (signal to noise of one block estimate) used by the Gaussian tests."""
        if self.gaussian_effect is not None:
            return self.gaussian_effect
        noise = self.sigma * sqrt(1.0 + 1.0 / self.n_controls)
        return self.nominal_effect() * sqrt(self.block_size) / noise

    def validate(self) -> None:
        if self.replications < 1:
            raise ConfigurationError("replications must be at least 1")
        if self.block_size < 1:
            raise ConfigurationError("block_size must be at least 1")
        if not 1 <= self.t_blank < self.t0:
            raise ConfigurationError(f"need 1 <= t_blank < t0, got {self.t_blank} and {self.t0}")
        if self.t_blank % self.block_size:
            raise ConfigurationError(
                f"t_blank = {self.t_blank} is not divisible by block_size = {self.block_size}"
            )
        if self.n_post_blocks < 1:
            raise ConfigurationError("horizon must cover at least one block")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie in (0, 1)")
        for name in ("rho_lambda", "rho_eps"):
            if not -1.0 < getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must lie in (-1, 1)")
        if self.fixed_t_sided not in ("one", "two"):
            raise ConfigurationError("fixed_t_sided must be one or two")
        if not 1 <= self.single_fixed_step <= self.n_post_blocks:
            raise ConfigurationError("fixed_t_horizon must lie within the post horizon")
        if self.mc_draws < 1 or self.chunk_size < 1 or self.kde_bins < 0:
            raise ConfigurationError("mc_draws and chunk_size must be positive, kde_bins nonnegative")
        if not self.tests:
            raise ConfigurationError("no tests requested")
        for tag in self.tests:
            if tag not in BASE_TAGS and gaussian_multiplier(tag) is None:
                raise ConfigurationError(f"unknown test tag {tag!r}")

    # serialisation --------------------------------------------------------
    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["tests"] = list(self.tests)
        out["mixture_multipliers"] = list(self.mixture_multipliers)
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT = {"n_controls", "t0", "t_blank", "horizon", "r_factors", "n_covariates", "block_size", "fixed_t_horizon",
        "fixed_t_max_steps", "fixed_t_exact_limit", "fixed_t_draws", "mc_draws", "kde_bins", "replications",
        "master_seed", "chunk_size"}
_FLOAT = {"rho_lambda", "rho_eps", "sigma", "effect", "effect_slope", "alt_effect", "gaussian_effect", "alpha"}


def _coerce(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigurationError(f"unknown configuration key {key!r}")
    if raw.lower() in ("none", "auto", ""):
        return None
    try:
        if key in _INT:
            number = float(raw)
            if not number.is_integer():
                raise ValueError(raw)
            return int(number)
        if key in _FLOAT:
            return float(raw)
        if key == "tests":
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        if key == "mixture_multipliers":
            return tuple(float(s) for s in raw.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse {key} = {raw!r}") from exc
    return raw


def parse_config(text: str, **overrides) -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, raw)
    values = {k: v for k, v in values.items() if v is not None}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, **overrides)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if value is None:
            value = "auto"
        elif isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
