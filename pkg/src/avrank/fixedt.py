"""Split-conformal permutation test at a fixed horizon, and its naive repeated use.

The pooled sample is the blank estimates followed by the post estimates. Each
size-``k`` subset (``k`` = number of post estimates) is scored by the sum of
its values (one-sided) or of their absolute values (two-sided), and the
p-value is the share of subsets scoring at least as high as the actual post
set. Subsets are enumerated lexicographically.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable

import numpy as np

from ._errors import ConfigurationError, InvalidInputError
from .rng import as_generator

EXACT_LIMIT = 10**7
_CHUNK = 200_000
# Relative slack on ">= observed": subset sums computed in a different order may
# differ from the observed sum by rounding, and the actual post set must count.
TIE_SLACK = 1e-10


@dataclass(frozen=True)
class FixedTResult:
    p_value: float
    n_combinations: int
    statistic: float
    exact: bool


def _score(values: np.ndarray, sided: str) -> np.ndarray:
    if sided == "one":
        return values
    if sided == "two":
        return np.abs(values)
    raise ConfigurationError(f"sided must be 'one' or 'two', not {sided!r}")


def exceed_threshold(scores: np.ndarray, observed):
    """Lowest subset score that counts as "at least as extreme" as ``observed``."""
    scale = np.abs(scores).sum(axis=-1)
    return observed - TIE_SLACK * (1.0 + scale)


def combination_indices(n: int, k: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop`` of the lexicographic list of ``k``-subsets of ``range(n)``."""
    it = itertools.islice(itertools.combinations(range(n), k), start, stop)
    flat = np.fromiter(itertools.chain.from_iterable(it), dtype=np.int64)
    return flat.reshape(-1, k)


def sample_combinations(n: int, k: int, draws: int, rng) -> np.ndarray:
    """``draws`` independent uniformly random ``k``-subsets of ``range(n)``."""
    return np.sort(np.argsort(rng.random((draws, n)), axis=1)[:, :k], axis=1)


def fixed_t_pvalue(blanks, post, sided: str = "one", mode: str = "exact", draws: int = 10_000,
                   rng=None, exact_limit: int = EXACT_LIMIT) -> FixedTResult:
    """Permutation p-value of the post window against the blank periods.

    ``mode="sampled"`` draws ``draws`` random subsets and returns
    ``(1 + #exceedances) / (draws + 1)``, which stays valid because the actual
    post set is counted once.
    """
    blanks = np.asarray(blanks, dtype=float).ravel()
    post = np.asarray(post, dtype=float).ravel()
    if blanks.size == 0 or post.size == 0:
        raise InvalidInputError("both blanks and post must be nonempty")
    if not (np.all(np.isfinite(blanks)) and np.all(np.isfinite(post))):
        raise InvalidInputError("estimates must be finite")
    pooled = _score(np.concatenate((blanks, post)), sided)
    n, k = pooled.size, post.size
    observed = float(pooled[blanks.size:].sum())
    cut = float(exceed_threshold(pooled, observed))
    if mode == "exact":
        total = comb(n, k)
        if total > exact_limit:
            raise ConfigurationError(f"{total} subsets exceed the exact limit {exact_limit}; use sampled mode")
        hits = 0
        for start in range(0, total, _CHUNK):
            idx = combination_indices(n, k, start, start + _CHUNK)
            hits += int(np.count_nonzero(pooled[idx].sum(axis=1) >= cut))
        return FixedTResult(hits / total, total, observed, True)
    if mode == "sampled":
        rng = as_generator(rng)
        idx = sample_combinations(n, k, int(draws), rng)
        hits = int(np.count_nonzero(pooled[idx].sum(axis=1) >= cut))
        return FixedTResult((1 + hits) / (draws + 1), int(draws), observed, False)
    raise ConfigurationError(f"mode must be 'exact' or 'sampled', not {mode!r}")


def repeated_fixed_t(blanks, stream: Iterable[float], alpha: float = 0.05, sided: str = "one",
                     mode: str = "exact", draws: int = 10_000, rng=None) -> int | None:
    """First post count at which the fixed-horizon p-value is at most ``alpha``.

    Re-running a fixed-horizon test after every arrival does not control size;
    this exists as a comparator, not as a test to use.
    """
    rng = as_generator(rng)
    post: list[float] = []
    for y in stream:
        post.append(float(y))
        if fixed_t_pvalue(blanks, post, sided, mode, draws, rng).p_value <= alpha:
            return len(post)
    return None
