"""Exception hierarchy shared by every module."""


class AvRankError(Exception):
    """Base class for all library errors."""


class InvalidInputError(AvRankError, ValueError):
    """An observation or argument is outside its domain (NaN, inf, out of range)."""


class InvalidStatisticError(AvRankError, ValueError):
    """A test statistic returned negative or non-finite values."""


class InvalidEValueError(AvRankError, ValueError):
    """An e-value is negative or NaN."""


class StateError(AvRankError, RuntimeError):
    """An operation does not match the current state of a stateful object."""


class ConfigurationError(AvRankError, ValueError):
    """A configuration is inconsistent or cannot be executed."""


class DataError(AvRankError, ValueError):
    """An input file or stream is malformed."""


class CheckpointError(DataError):
    """A checkpoint is corrupt or was written for a different configuration."""
