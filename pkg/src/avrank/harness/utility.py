"""Discounted utility of rejection curves and the fixed-horizon preference regions.

A test's utility is ``sum_{t = T0+1}^{T} delta**t * P[rejected by t]``, where
``t`` runs over raw periods. With blocks of size ``B`` a rejection can only
happen when a block completes, so the cumulative rejection rate is a step
function that jumps at ``T0 + k * B``.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .experiment import ExperimentResult


def default_deltas(step: float = 0.01) -> np.ndarray:
    """Discount grid ``step, 2 * step, ..., 1``."""
    n = int(round(1.0 / step))
    return np.arange(1, n + 1) / n


def _period_curve(result: ExperimentResult, tag: str) -> np.ndarray:
    """Cumulative rejection rate at every raw period ``T0 + 1 .. T``."""
    cfg = result.config
    blocks = result.curve(tag)
    span = blocks.size * cfg.block_size
    # period T0 + j (1-based j) has completed floor(j / B) blocks
    done = np.arange(1, span + 1) // cfg.block_size
    return np.concatenate(([0.0], blocks))[done]


def discounted_utility(result: ExperimentResult, tag: str, delta) -> np.ndarray | float:
    """Utility of one test at one discount factor or an array of them."""
    d = np.asarray(delta, dtype=float)
    if np.any((d <= 0.0) | (d > 1.0)):
        raise ValueError("discount factors must lie in (0, 1]")
    curve = _period_curve(result, tag)
    t = result.config.t0 + np.arange(1, curve.size + 1)
    # delta**t underflows harmlessly to 0 for small delta and long samples
    u = (d[..., None] ** t * curve).sum(axis=-1)
    return float(u) if np.ndim(d) == 0 else u


def preference_region(result: ExperimentResult, av_tag: str, fixed_steps, deltas=None) -> dict[int, np.ndarray]:
    """For each fixed horizon (in post blocks), the discount factors where it beats ``av_tag``.

    A fixed-horizon test is preferred only when its utility is strictly larger;
    ties go to the anytime-valid test.
    """
    deltas = default_deltas() if deltas is None else np.asarray(deltas, dtype=float)
    u_av = discounted_utility(result, av_tag, deltas)
    out = {}
    for k in fixed_steps:
        u_fixed = discounted_utility(result, f"fixed_t@{int(k)}", deltas)
        out[int(k)] = deltas[u_fixed > u_av]
    return out


def dominance_threshold(result: ExperimentResult, av_tag: str, fixed_steps, deltas=None) -> float | None:
    """Smallest grid value from which ``av_tag`` beats every fixed horizon at every larger grid value.

    Returns None when some fixed horizon is preferred at the largest grid value.
    """
    deltas = default_deltas() if deltas is None else np.sort(np.asarray(deltas, dtype=float))
    region = preference_region(result, av_tag, fixed_steps, deltas)
    lost = np.zeros(deltas.size, dtype=bool)
    for ds in region.values():
        lost |= np.isin(deltas, ds)
    if lost[-1]:
        return None
    if not lost.any():
        return float(deltas[0])
    return float(deltas[np.flatnonzero(lost)[-1] + 1])


def write_utility(result: ExperimentResult, path, tags=None, deltas=None) -> None:
    """Write ``test,delta,utility`` rows for every tag and discount factor."""
    deltas = default_deltas() if deltas is None else np.asarray(deltas, dtype=float)
    tags = result.tags() if tags is None else list(tags)
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test", "delta", "utility"])
        for tag in tags:
            for d, u in zip(deltas, discounted_utility(result, tag, deltas)):
                w.writerow([tag, format(float(d), ".10g"), format(float(u), ".10g")])


__all__ = ["default_deltas", "discounted_utility", "preference_region", "dominance_threshold", "write_utility"]
