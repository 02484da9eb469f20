"""Simulation study harness: configs, batched experiments, utilities and the streaming monitor."""
from .config import ExperimentConfig, dump_config, load_config, parse_config
from .experiment import ExperimentResult, read_results, result_summary, run_experiment, write_results
from .monitor import StatisticSpec, load_checkpoint, monitor, parse_stream, read_pre, save_checkpoint
from .utility import default_deltas, discounted_utility, dominance_threshold, preference_region, write_utility

__all__ = [
    "ExperimentConfig", "dump_config", "load_config", "parse_config",
    "ExperimentResult", "read_results", "result_summary", "run_experiment", "write_results",
    "StatisticSpec", "load_checkpoint", "monitor", "parse_stream", "read_pre", "save_checkpoint",
    "default_deltas", "discounted_utility", "dominance_threshold", "preference_region", "write_utility",
]
