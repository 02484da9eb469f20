"""Monte Carlo experiments: simulate panels, estimate, block, and run every requested test.

Replications are processed in chunks, all rows of a chunk advancing one post
block at a time. Each replication draws from its own streams (panel, tie keys,
Gaussian draws, smoothing offsets), keyed by the master seed and its index, so
results do not depend on the chunk size or on the number of worker processes.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .._errors import DataError
from ..alternatives.gaussian import first_step_rank_probs
from ..eprocess import LOG_SLACK
from ..panel import IfeConfig, block_aggregate, did_estimates, scm_estimates, scm_weights, simulate_ife
from ..rng import stream
from .batch import BatchGaussian, BatchKDE, FixedTBatch, batch_ranks, reduced_evalue
from .config import ExperimentConfig, gaussian_multiplier, parse_config, dump_config

log = logging.getLogger(__name__)

AV_TAGS = ("av_plugin", "av_plugin_generic", "mix_adaptive", "mix_average")


@dataclass
class ExperimentResult:
    """First rejection step (in post blocks, 0 = never) per test and replication.

    Single fixed-horizon tests at any step ``k`` up to ``config.fixed_steps``
    are available under the derived tags ``fixed_t@k``.
    """

    config: ExperimentConfig
    steps: dict
    fixed_pvalues: np.ndarray | None = None

    @property
    def replications(self) -> int:
        return next(iter(self.steps.values())).size

    @property
    def n_steps(self) -> int:
        return self.config.n_post_blocks

    def times(self) -> np.ndarray:
        """Period at which each post block completes."""
        cfg = self.config
        return cfg.t0 + cfg.block_size * np.arange(1, self.n_steps + 1)

    def tags(self) -> list[str]:
        out = list(self.steps)
        if self.fixed_pvalues is not None:
            out += [f"fixed_t@{k}" for k in range(1, self.fixed_pvalues.shape[1] + 1)]
        return out

    def rejection_steps(self, tag: str) -> np.ndarray:
        if tag in self.steps:
            return self.steps[tag]
        if tag.startswith("fixed_t@") and self.fixed_pvalues is not None:
            k = int(tag.split("@", 1)[1])
            if 1 <= k <= self.fixed_pvalues.shape[1]:
                return np.where(self.fixed_pvalues[:, k - 1] <= self.config.alpha, k, 0)
        raise KeyError(f"unknown test tag {tag!r}")

    def curve(self, tag: str) -> np.ndarray:
        """Share of replications rejected by each post block (non-decreasing)."""
        steps = self.rejection_steps(tag)
        hit = np.bincount(steps, minlength=self.n_steps + 1)[1:]
        return np.cumsum(hit) / steps.size

    def rate(self, tag: str) -> float:
        return float(self.curve(tag)[-1])


def _split(n: int, size: int):
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def _estimate_blocks(cfg: ExperimentConfig, rep: int):
    rng = stream(cfg.master_seed, rep, "panel")
    slope, level = cfg.effect_slope, cfg.effect
    icfg = IfeConfig(
        n_controls=cfg.n_controls, t_total=cfg.t0 + cfg.horizon, t0=cfg.t0, t_blank=cfg.t_blank,
        r_factors=cfg.r_factors, rho_lambda=cfg.rho_lambda, rho_eps=cfg.rho_eps, sigma=cfg.sigma,
        n_covariates=cfg.n_covariates, loading_dist=cfg.loading_dist, effect=lambda t: level + slope * (t - cfg.t0),
    )
    panel = simulate_ife(icfg, rng)
    est = did_estimates(panel) if cfg.estimator == "did" else scm_estimates(panel, scm_weights(panel))
    blocked = block_aggregate(est, cfg.block_size)
    return blocked.blank, blocked.post


def _fixed_family(cfg: ExperimentConfig) -> FixedTBatch:
    return FixedTBatch(cfg.n_blank_blocks, cfg.fixed_t_sided, cfg.fixed_t_exact_limit, cfg.fixed_t_draws,
                       lambda k: stream(cfg.master_seed, "fixed_t_subsets", k))


def _run_chunk(cfg: ExperimentConfig, start: int, stop: int, fixed: FixedTBatch | None = None):
    reps = range(start, stop)
    n_rows = len(reps)
    n0, horizon = cfg.n_blank_blocks, cfg.n_post_blocks
    blank = np.empty((n_rows, n0))
    post = np.empty((n_rows, horizon))
    keys = np.empty((n_rows, n0 + horizon))
    for i, rep in enumerate(reps):
        blank[i], post[i] = _estimate_blocks(cfg, rep)
        keys[i] = stream(cfg.master_seed, rep, "ties").random(n0 + horizon)
    seq, red = batch_ranks(blank, post, keys[:, :n0], keys[:, n0:])

    tests = set(cfg.tests)
    delta = cfg.effect_size()
    multipliers = {gaussian_multiplier(t) for t in tests} - {None}
    if tests & {"mix_adaptive", "mix_average"}:
        multipliers |= set(cfg.mixture_multipliers)
    gauss = {}
    if multipliers:
        draws = np.stack([np.sort(stream(cfg.master_seed, rep, "gaussian").standard_normal((cfg.mc_draws, n0)),
                                  axis=1) for rep in reps])
        gauss = {c: BatchGaussian(draws, c * delta) for c in sorted(multipliers)}
        del draws
    plugin = tests & {"av_plugin", "av_plugin_generic"}
    if plugin:
        kde = BatchKDE(n_rows, horizon, bins=cfg.kde_bins)
        offsets = np.stack([stream(cfg.master_seed, rep, "plugin").random(horizon) for rep in reps])
        offsets = np.where(offsets > 0.0, offsets, 0.5)
        init = first_step_rank_probs(n0, delta)
    fixed_steps = cfg.fixed_steps if tests & {"fixed_t", "repeated_fixed_t"} else 0
    if fixed_steps:
        fixed = fixed or _fixed_family(cfg)
        pvals = np.ones((n_rows, fixed_steps))

    av = [t for t in cfg.tests if t in AV_TAGS or gaussian_multiplier(t) is not None]
    log_w = {t: np.zeros(n_rows) for t in av}
    first = {t: np.zeros(n_rows, dtype=np.int64) for t in av}
    mix_keys = sorted(cfg.mixture_multipliers)
    mix_log = {t: np.zeros((n_rows, len(mix_keys))) for t in ("mix_adaptive",) if t in tests}
    threshold = -np.log(cfg.alpha) - LOG_SLACK
    slots = np.zeros((n_rows, n0 + 1), dtype=np.int64)
    rows = np.arange(n_rows)

    for k in range(horizon):
        t = n0 + k + 1
        r_seq, r_red = seq[:, k], red[:, k]
        counts = slots + 1
        evals = {}
        gauss_e = {c: reduced_evalue(g.statistic(), r_red, counts, t) for c, g in gauss.items()}
        for tag in av:
            c = gaussian_multiplier(tag)
            if c is not None:
                evals[tag] = gauss_e[c]
        if "mix_adaptive" in tests:
            cand = np.stack([gauss_e[c] for c in mix_keys], axis=1)
            lw = mix_log["mix_adaptive"]
            top = lw.max(axis=1, keepdims=True)
            dead = ~np.isfinite(top[:, 0])
            w = np.exp(lw - np.where(np.isfinite(top), top, 0.0))
            w_sum = w.sum(axis=1)
            e_mix = (w * cand).sum(axis=1) / np.where(w_sum > 0, w_sum, 1.0)
            evals["mix_adaptive"] = np.where(dead, 1.0, e_mix)
            with np.errstate(divide="ignore"):
                lw += np.log(cand)
        if "mix_average" in tests:
            evals["mix_average"] = np.stack([gauss_e[c] for c in mix_keys], axis=1).mean(axis=1)
        if plugin:
            u = offsets[:, k]
            if k == 0:
                if "av_plugin" in tests:
                    evals["av_plugin"] = init[r_red - 1] * t / counts[rows, r_red - 1]
                if "av_plugin_generic" in tests:
                    evals["av_plugin_generic"] = init[r_seq - 1] * t / init.sum()
            else:
                if "av_plugin" in tests:
                    edges = np.concatenate((np.zeros((n_rows, 1)), np.cumsum(counts, axis=1)), axis=1) / t
                    cdf = kde.cdf(edges)
                    cdf[:, 0], cdf[:, -1] = 0.0, 1.0
                    stat = np.maximum(np.diff(cdf, axis=1), 0.0)
                    evals["av_plugin"] = reduced_evalue(stat, r_red, counts, t)
                if "av_plugin_generic" in tests:
                    evals["av_plugin_generic"] = kde.pdf((r_seq - u) / t)
            kde.add((r_seq - u) / t)
        for g in gauss.values():
            g.update(r_red)
        slots[rows, r_red - 1] += 1
        with np.errstate(divide="ignore"):
            for tag in av:
                log_w[tag] += np.log(evals[tag])
                hit = (first[tag] == 0) & (log_w[tag] >= threshold)
                first[tag][hit] = k + 1
        if k < fixed_steps:
            pvals[:, k] = fixed.pvalues(blank, post[:, : k + 1])

    steps = dict(first)
    if fixed_steps:
        below = pvals <= cfg.alpha
        if "repeated_fixed_t" in tests:
            steps["repeated_fixed_t"] = np.where(below.any(axis=1), below.argmax(axis=1) + 1, 0)
        if "fixed_t" in tests:
            k = cfg.single_fixed_step
            steps["fixed_t"] = np.where(below[:, k - 1], k, 0)
    return {t: steps[t] for t in cfg.tests}, (pvals if fixed_steps else None)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    cfg.validate()
    chunks = _split(cfg.replications, cfg.chunk_size)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(chunks), *zip(*chunks)))
    else:
        parts = []
        fixed = _fixed_family(cfg)
        for i, (a, b) in enumerate(chunks):
            parts.append(_run_chunk(cfg, a, b, fixed))
            log.info("replications %d-%d done (%d/%d chunks)", a, b - 1, i + 1, len(chunks))
    steps = {t: np.concatenate([p[0][t] for p in parts]) for t in cfg.tests}
    pv = None if parts[0][1] is None else np.concatenate([p[1] for p in parts])
    return ExperimentResult(cfg, steps, pv)


# ---------------------------------------------------------------------------
# CSV round trip

def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def write_results(result: ExperimentResult, out_dir) -> None:
    """Write ``results.csv``, ``curves.csv`` and the configuration used (``config.txt``)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    times = result.times()
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test", "replication", "rejection_time"])
        for tag in result.tags():
            for rep, k in enumerate(result.rejection_steps(tag)):
                w.writerow([tag, rep, int(times[k - 1]) if k > 0 else ""])
    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test", "t", "rejection_rate"])
        for tag in result.tags():
            for t, rate in zip(times, result.curve(tag)):
                w.writerow([tag, int(t), _fmt(rate)])
    (out / "config.txt").write_text(dump_config(result.config))


def read_results(out_dir) -> ExperimentResult:
    out = Path(out_dir)
    try:
        cfg = parse_config((out / "config.txt").read_text())
        with open(out / "results.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(f"cannot read results from {out}: {exc}") from exc
    times = cfg.t0 + cfg.block_size * np.arange(1, cfg.n_post_blocks + 1)
    step_of = {int(t): k + 1 for k, t in enumerate(times)}
    steps: dict[str, list[int]] = {}
    try:
        for row in rows:
            raw = row["rejection_time"]
            steps.setdefault(row["test"], []).append(step_of[int(raw)] if raw else 0)
    except (KeyError, ValueError) as exc:
        raise DataError(f"{out / 'results.csv'}: malformed row") from exc
    arrays = {t: np.asarray(v, dtype=np.int64) for t, v in steps.items()}
    return ExperimentResult(cfg, arrays, None)


def result_summary(result: ExperimentResult) -> dict:
    return {tag: result.rate(tag) for tag in result.tags()}


__all__ = ["ExperimentResult", "run_experiment", "write_results", "read_results", "result_summary"]
