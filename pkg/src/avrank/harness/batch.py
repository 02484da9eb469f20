"""Vectorised versions of the rank tests, one row per replication.

These mirror the streaming objects in ``avrank.sequential`` and
``avrank.alternatives`` but advance many independent histories at once. Every
row only ever sees its own data and its own random draws, so results do not
depend on how replications are grouped into chunks.
"""
from __future__ import annotations

from math import comb

import numpy as np
from scipy.special import ndtr

from ..alternatives.gaussian import log_slot_probs
from ..alternatives.plugin import MIN_BANDWIDTH
from ..fixedt import combination_indices, exceed_threshold, sample_combinations

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _lex_less(a, ka, b, kb):
    less = a < b
    eq = a == b
    if eq.any():
        less |= eq & (ka < kb)
    return less


def batch_ranks(blank, post, blank_keys, post_keys):
    """Sequential and reduced ranks of every post value, ties broken by the keys."""
    r, h = post.shape
    seq = np.empty((r, h), dtype=np.int64)
    red = np.empty((r, h), dtype=np.int64)
    for k in range(h):
        y, ky = post[:, k:k + 1], post_keys[:, k:k + 1]
        red[:, k] = 1 + _lex_less(blank, blank_keys, y, ky).sum(axis=1)
        seq[:, k] = red[:, k] + _lex_less(post[:, :k], post_keys[:, :k], y, ky).sum(axis=1)
    return seq, red


class BatchGaussian:
    """Reduced-rank Gaussian statistic with fixed pre draws, one row per replication."""

    def __init__(self, sorted_draws: np.ndarray, delta: float):
        # sorted_draws: (R, M, T0); slot tables are stored as (R, T0 + 1, M)
        self.log_g = np.ascontiguousarray(np.swapaxes(log_slot_probs(sorted_draws, delta), 1, 2))
        self.g = np.exp(self.log_g)
        self.log_w = np.zeros(sorted_draws.shape[:2])
        self._rows = np.arange(sorted_draws.shape[0])

    def statistic(self) -> np.ndarray:
        top = self.log_w.max(axis=1, keepdims=True)
        rel = self.log_w - np.where(np.isfinite(top), top, 0.0)
        # weights below e^-60 of the largest change nothing but would be subnormal and slow
        w = np.where(rel > -60.0, np.exp(np.maximum(rel, -60.0)), 0.0)
        return np.matmul(self.g, w[:, :, None])[:, :, 0]

    def update(self, red: np.ndarray) -> None:
        self.log_w += self.log_g[self._rows, red - 1]


def reduced_evalue(stat: np.ndarray, red: np.ndarray, counts: np.ndarray, t: int) -> np.ndarray:
    """Row-wise ``(S(R~) / q^{R~}) / sum(S)``, with ``0/0 = 1``."""
    rows = np.arange(stat.shape[0])
    num = stat[rows, red - 1]
    total = stat.sum(axis=1)
    q = counts[rows, red - 1] / t
    with np.errstate(invalid="ignore", divide="ignore"):
        e = num / (q * total)
    return np.where(total > 0, e, 1.0)


class BatchKDE:
    """Reflected Gaussian KDE of smoothed ranks for many replications.

    ``bins = 0`` evaluates the kernel sums exactly. ``bins = G > 0`` linearly bins
    the reflected sample on a grid of width ``1/G`` over [-1, 2] and gets the
    CDF at the ``G + 1`` grid edges of [0, 1] by one FFT convolution per step;
    between edges the CDF is linear. The binned estimate is itself a proper
    density on [0, 1], so e-values built from it stay exactly valid.
    """

    def __init__(self, n_rows: int, capacity: int, bins: int = 0, floor: float = MIN_BANDWIDTH):
        self.v = np.empty((n_rows, capacity))
        self.n = 0
        self.bins = int(bins)
        self.floor = floor
        self.s1 = np.zeros(n_rows)
        self.s2 = np.zeros(n_rows)
        self._edges_cache = None
        if self.bins:
            self.grid = np.zeros((n_rows, 3 * self.bins))

    def add(self, v: np.ndarray) -> None:
        self.v[:, self.n] = v
        self.n += 1
        self.s1 += v
        self.s2 += v * v
        self._edges_cache = None
        if self.bins:
            g = self.bins
            rows = np.arange(v.size)
            for p in (-v, v, 2.0 - v):
                pos = (p + 1.0) * g - 0.5
                lo = np.floor(pos)
                frac = pos - lo
                lo = lo.astype(np.int64)
                np.add.at(self.grid, (rows, np.clip(lo, 0, 3 * g - 1)), 1.0 - frac)
                np.add.at(self.grid, (rows, np.clip(lo + 1, 0, 3 * g - 1)), frac)

    def bandwidth(self) -> np.ndarray:
        n = self.n
        big = 3 * n
        total = 2.0 * n - self.s1
        sq = 3.0 * self.s2 - 4.0 * self.s1 + 4.0 * n
        var = np.maximum((sq - total * total / big) / (big - 1), 0.0)
        sd = np.sqrt(var)
        q = {}
        needed = []
        for p in (0.25, 0.75):
            pos = p * (big - 1)
            lo = int(np.floor(pos))
            hi = min(lo + 1, big - 1)
            q[p] = (lo, hi, pos - lo)
            needed += [self._order_index(lo), self._order_index(hi)]
        kth = sorted({i for i, _ in needed})
        part = np.partition(self.v[:, :n], kth, axis=1)

        def order(k):
            i, kind = self._order_index(k)
            x = part[:, i]
            return -x if kind == 0 else (x if kind == 1 else 2.0 - x)

        quart = {}
        for p, (lo, hi, frac) in q.items():
            a, b = order(lo), order(hi)
            quart[p] = a + frac * (b - a)
        spread = np.minimum(sd, (quart[0.75] - quart[0.25]) / 1.34)
        spread = np.where(spread > 0, spread, sd)
        return np.maximum(self.floor, 0.9 * spread * big ** (-0.2))

    def _order_index(self, k: int) -> tuple[int, int]:
        n = self.n
        if k < n:
            return n - 1 - k, 0
        if k < 2 * n:
            return k - n, 1
        return 3 * n - 1 - k, 2

    def _points(self):
        v = self.v[:, : self.n]
        return np.concatenate((-v, v, 2.0 - v), axis=1)

    def _edge_cdf(self) -> np.ndarray:
        """Normalised CDF at the grid edges ``k / G``, shape (R, G + 1)."""
        if self._edges_cache is not None:
            return self._edges_cache
        g = self.bins
        h = self.bandwidth()
        n_tab = np.arange(-(2 * g - 1), 2 * g + 1)
        table = ndtr((n_tab[None, :] - 0.5) / (g * h[:, None]))
        length = 4 * g
        conv = np.fft.irfft(np.fft.rfft(self.grid, length, axis=1) * np.fft.rfft(table, length, axis=1),
                            length, axis=1)
        cum = conv[:, 3 * g - 1: 4 * g]
        cdf = (cum - cum[:, :1]) / (cum[:, -1:] - cum[:, :1])
        cdf[:, 0], cdf[:, -1] = 0.0, 1.0
        self._edges_cache = np.maximum.accumulate(cdf, axis=1)
        return self._edges_cache

    def cdf(self, x: np.ndarray) -> np.ndarray:
        """Normalised CDF at points ``x`` of shape (R, P)."""
        x = np.clip(x, 0.0, 1.0)
        if self.bins:
            g = self.bins
            edges = self._edge_cdf()
            pos = x * g
            k = np.minimum(np.floor(pos).astype(np.int64), g - 1)
            lo = np.take_along_axis(edges, k, axis=1)
            hi = np.take_along_axis(edges, k + 1, axis=1)
            return lo + (pos - k) * (hi - lo)
        p = self._points()
        h = self.bandwidth()[:, None, None]
        base = ndtr(-p[:, None, :] / h)
        mass = (ndtr((1.0 - p[:, None, :]) / h) - base).mean(axis=2)
        raw = (ndtr((x[:, :, None] - p[:, None, :]) / h) - base).mean(axis=2)
        return raw / mass

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Normalised density at one point per row, ``x`` of shape (R,)."""
        if self.bins:
            g = self.bins
            edges = self._edge_cdf()
            k = np.clip(np.floor(x * g).astype(np.int64), 0, g - 1)[:, None]
            return (np.take_along_axis(edges, k + 1, axis=1) - np.take_along_axis(edges, k, axis=1))[:, 0] * g
        p = self._points()
        h = self.bandwidth()[:, None]
        mass = (ndtr((1.0 - p) / h) - ndtr(-p / h)).mean(axis=1)
        z = (x[:, None] - p) / h
        return np.exp(-0.5 * z * z).mean(axis=1) / (_SQRT_2PI * h[:, 0]) / mass


class FixedTBatch:
    """Permutation p-values of growing post windows, one row per replication.

    Subset families are shared by all rows: exhaustive when small enough,
    otherwise a fixed set of sampled subsets per window length.
    """

    def __init__(self, n_blank: int, sided: str, exact_limit: int, draws: int, rng_for_step,
                 chunk: int = 50_000):
        self.n_blank = n_blank
        self.sided = sided
        self.exact_limit = exact_limit
        self.draws = draws
        self.rng_for_step = rng_for_step
        self.chunk = chunk
        self._cache: dict[int, tuple[list[np.ndarray], int, bool]] = {}

    def _family(self, k: int):
        if k not in self._cache:
            n = self.n_blank + k
            total = comb(n, k)
            exact = total <= self.exact_limit
            mats = []
            if exact:
                for start in range(0, total, self.chunk):
                    idx = combination_indices(n, k, start, start + self.chunk)
                    mats.append(self._indicator(idx, n))
                size = total
            else:
                idx = sample_combinations(n, k, self.draws, self.rng_for_step(k))
                for start in range(0, self.draws, self.chunk):
                    mats.append(self._indicator(idx[start:start + self.chunk], n))
                size = self.draws
            self._cache[k] = (mats, size, exact)
        return self._cache[k]

    @staticmethod
    def _indicator(idx: np.ndarray, n: int) -> np.ndarray:
        ind = np.zeros((n, idx.shape[0]))
        ind[idx, np.arange(idx.shape[0])[:, None]] = 1
        return ind

    def pvalues(self, blank: np.ndarray, post: np.ndarray) -> np.ndarray:
        """p-values for the window made of all columns of ``post``."""
        k = post.shape[1]
        pooled = np.concatenate((blank, post), axis=1)
        if self.sided == "two":
            pooled = np.abs(pooled)
        observed = pooled[:, self.n_blank:].sum(axis=1)
        cut = exceed_threshold(pooled, observed)[:, None]
        mats, size, exact = self._family(k)
        hits = np.zeros(pooled.shape[0], dtype=np.int64)
        for ind in mats:
            hits += np.count_nonzero(pooled @ ind >= cut, axis=1)
        return hits / size if exact else (1.0 + hits) / (size + 1.0)
