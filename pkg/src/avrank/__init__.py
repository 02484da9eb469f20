"""Anytime-valid rank tests for treatment effects in panel data."""
from ._errors import (
    AvRankError,
    CheckpointError,
    ConfigurationError,
    DataError,
    InvalidEValueError,
    InvalidInputError,
    InvalidStatisticError,
    StateError,
)
from .eprocess import EProcess, absorb, anytime_p, e_value_generic, e_value_reduced
from .ranks import NullCategorical, RankHistory, null_category_probs, smoothed_rank
from .sequential import SequentialRankTest, StepReport

__version__ = "0.1.0"

__all__ = [
    "AvRankError", "CheckpointError", "ConfigurationError", "DataError", "InvalidEValueError",
    "InvalidInputError", "InvalidStatisticError", "StateError",
    "EProcess", "absorb", "anytime_p", "e_value_generic", "e_value_reduced",
    "NullCategorical", "RankHistory", "null_category_probs", "smoothed_rank",
    "SequentialRankTest", "StepReport",
]
