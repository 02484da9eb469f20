"""Producers of test statistics: plug-in, Gaussian and mixtures."""
from .base import StatisticStrategy, UniformStatistic
from .gaussian import (
    GaussianAltConfig,
    GaussianGenericStatistic,
    GaussianReducedStatistic,
    decorrelate,
    first_step_rank_probs,
    gaussian_statistic_generic,
    gaussian_statistic_reduced,
    log_slot_probs,
)
from .mixture import DEFAULT_MULTIPLIERS, MixtureState, MixtureStatistic, mixture_step
from .plugin import (
    PluginGenericStatistic,
    PluginReducedStatistic,
    PluginState,
    ReflectedKDE,
    plugin_statistic_generic,
    plugin_statistic_reduced,
    silverman_bandwidth,
)

__all__ = [
    "StatisticStrategy", "UniformStatistic",
    "GaussianAltConfig", "GaussianGenericStatistic", "GaussianReducedStatistic", "decorrelate",
    "first_step_rank_probs", "gaussian_statistic_generic", "gaussian_statistic_reduced", "log_slot_probs",
    "DEFAULT_MULTIPLIERS", "MixtureState", "MixtureStatistic", "mixture_step",
    "PluginGenericStatistic", "PluginReducedStatistic", "PluginState", "ReflectedKDE",
    "plugin_statistic_generic", "plugin_statistic_reduced", "silverman_bandwidth",
]
