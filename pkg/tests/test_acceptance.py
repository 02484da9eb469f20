"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL verdict (printed in the terminal summary) and
then asserts it. Monte Carlo tolerances are the stated ones; nothing here is
tuned to the outcome.
"""
import io
import math
import time
from collections import Counter, defaultdict
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from scipy.stats import norm

from avrank import NullCategorical, RankHistory, e_value_generic, e_value_reduced
from avrank.alternatives import GaussianAltConfig, MixtureState, PluginState, gaussian_statistic_reduced, mixture_step
from avrank.alternatives.plugin import plugin_statistic_generic, plugin_statistic_reduced
from avrank.fixedt import fixed_t_pvalue
from avrank.harness import ExperimentConfig, StatisticSpec, dominance_threshold, monitor, run_experiment
from avrank.harness.cli import main

from oracles import gaussian_reduced_quadrature

SE = lambda p, n: math.sqrt(p * (1 - p) / n)  # noqa: E731


# 1 -------------------------------------------------------------------------

def test_criterion_01_exhaustive_null_laws(verdict):
    start = time.perf_counter()
    ok = True
    checked = 0
    for t0 in (2, 3, 4):
        n_post = 3
        seq_law = defaultdict(Counter)
        red_law = defaultdict(Counter)
        for perm in permutations(range(t0 + n_post)):
            h = RankHistory(perm[:t0])
            for k, y in enumerate(perm[t0:]):
                past_seq, past_red = h.seq_ranks, h.red_ranks
                null = h.null()
                seq, red = h.push(y)
                seq_law[(k, past_seq)][seq] += 1
                red_law[(k, past_red)][(null.counts, red)] += 1
        for (k, _), counts in seq_law.items():
            total = sum(counts.values())
            t = t0 + k + 1
            ok &= set(counts) == set(range(1, t + 1))
            ok &= all(Fraction(c, total) == Fraction(1, t) for c in counts.values())
            checked += 1
        for counts in red_law.values():
            total = sum(counts.values())
            for (null_counts, red), c in counts.items():
                ok &= Fraction(c, total) == Fraction(null_counts[red - 1], sum(null_counts))
                checked += 1
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10
    assert verdict(1, ok, f"{checked} conditional laws matched exactly in {elapsed:.1f}s (< 10s)")


# 2 -------------------------------------------------------------------------

def test_criterion_02_evalue_mean_one(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    exact_ok = True
    stats = []
    for _ in range(100):
        t0 = int(rng.integers(1, 7))
        counts = tuple(int(c) for c in 1 + rng.integers(0, 4, size=t0 + 1))
        null = NullCategorical(counts, sum(counts))
        s = [Fraction(int(v)) for v in rng.integers(0, 10, size=t0 + 1)]
        exact_ok &= sum(q * e_value_reduced(s, r, null) for r, q in enumerate(null.fractions(), 1)) == 1
        g = [Fraction(int(v)) for v in rng.integers(0, 10, size=null.t)]
        exact_ok &= sum(e_value_generic(g, r) for r in range(1, null.t + 1)) / null.t == 1
        stats.append((t0, [float(v) for v in s]))
    # Monte Carlo on real exchangeable data: the same 100 statistics, each used at the third post step,
    # pooled into one z-score so the 3 SE tolerance is a single comparison
    reps = 40_000
    e = np.empty(reps)
    for rep in range(reps):
        t0, s = stats[rep % 100]
        x = rng.standard_normal(t0 + 3)
        h = RankHistory(x[:t0], seed=rng)
        h.push(x[t0])
        h.push(x[t0 + 1])
        null = h.null()
        _, red = h.push(x[t0 + 2])
        e[rep] = e_value_reduced(s, red, null)
    z = (e.mean() - 1.0) / (e.std(ddof=1) / math.sqrt(reps))
    elapsed = time.perf_counter() - start
    ok = exact_ok and abs(z) < 3 and elapsed < 30
    assert verdict(2, ok, f"exact mean 1 on 100 statistics: {exact_ok}; MC mean {e.mean():.4f}, |z| = {abs(z):.2f} < 3; "
                          f"{elapsed:.1f}s (< 30s)")


# 3 and 4 -------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_03_ville_validity_long_horizon(verdict):
    cfg = ExperimentConfig(scenario="did-iid", t0=50, t_blank=25, n_controls=20, horizon=1000,
                           tests=("av_gaussian", "av_plugin"), replications=2000, kde_bins=256, master_seed=3)
    start = time.perf_counter()
    res = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    bound = 0.05 + 2 * SE(0.05, cfg.replications)
    peaks = {tag: float(res.curve(tag).max()) for tag in cfg.tests}
    ok = all(p <= bound for p in peaks.values())
    assert verdict(3, ok, f"max crossing frequency over 1000 steps {peaks} <= {bound:.4f}; {elapsed:.0f}s")


def test_criterion_04_repeated_fixed_t_size(verdict):
    cfg = ExperimentConfig(scenario="did-iid", t0=50, t_blank=25, n_controls=20, horizon=20,
                           tests=("repeated_fixed_t", "fixed_t"), fixed_t_horizon=20, replications=2000, master_seed=4)
    res = run_experiment(cfg)
    rate = res.rate("repeated_fixed_t")
    ok = rate > 0.15 and abs(rate - 0.20) <= 0.04
    assert verdict(4, ok, f"repeated fixed-T crossing by step 20 = {rate:.3f} (> 0.15, 0.20 +- 0.04); "
                          f"single fixed-T at 20 = {res.rate('fixed_t'):.3f}")


# 5 and 6 -------------------------------------------------------------------

def _table_cell(rho_lambda, rho_eps, block_size, seed):
    cfg = ExperimentConfig(scenario="scm-var1", n_controls=20, t0=20 * block_size, horizon=30 * block_size,
                           block_size=block_size, rho_lambda=rho_lambda, rho_eps=rho_eps,
                           tests=("fixed_t", "av_gaussian", "av_plugin"), fixed_t_horizon=12, fixed_t_max_steps=12,
                           replications=2000, master_seed=seed)
    res = run_experiment(cfg)
    return {tag: res.rate(tag) for tag in cfg.tests}


def test_criterion_05_table_cells_block_three(verdict):
    targets = {
        (0.0, 0.0): ({"fixed_t": 0.06, "av_gaussian": 0.02, "av_plugin": 0.02}, 0.02),
        (0.75, 0.5): ({"fixed_t": 0.12, "av_gaussian": 0.09, "av_plugin": 0.13}, 0.03),
    }
    ok = True
    parts = []
    for (rl, re_), (want, tol) in targets.items():
        got = _table_cell(rl, re_, 3, seed=5)
        for tag, target in want.items():
            hit = abs(got[tag] - target) <= tol
            ok &= hit
            parts.append(f"({rl},{re_}) {tag} {got[tag]:.3f} vs {target:.2f}+-{tol:.2f}{'' if hit else ' MISS'}")
    assert verdict(5, ok, "; ".join(parts))


def test_criterion_06_table_cell_block_one(verdict):
    got = _table_cell(0.75, 0.5, 1, seed=6)
    ok = abs(got["av_gaussian"] - 0.20) <= 0.04
    assert verdict(6, ok, f"AV-Gaussian {got['av_gaussian']:.3f} vs 0.20+-0.04 "
                          f"(fixed-T {got['fixed_t']:.3f}, AV-plug-in {got['av_plugin']:.3f})")


# 7 -------------------------------------------------------------------------

def test_criterion_07_reduced_plugin_dominates_generic(verdict):
    rng = np.random.default_rng(7)
    reps, t0, n_post, delta = 2000, 20, 30, 1.0
    diffs = np.empty(reps)
    for rep in range(reps):
        pre = rng.standard_normal(t0)
        post = rng.standard_normal(n_post) + delta
        h = RankHistory(pre, seed=rng)
        state = PluginState(seed=rng)  # one kernel estimate feeds both statistics
        total = 0.0
        for y in post:
            t = h.next_t
            null = h.null()
            generic = plugin_statistic_generic(state, t)
            reduced = plugin_statistic_reduced(state, null)
            seq, red = h.push(y)
            e_gen = float(generic[seq - 1])
            e_red = float(e_value_reduced(reduced, red, null))
            total += math.log(e_red) - math.log(e_gen)
            state.record(seq, t)
        diffs[rep] = total / n_post
    mean, se = diffs.mean(), diffs.std(ddof=1) / math.sqrt(reps)
    ok = mean >= -3 * se
    assert verdict(7, ok, f"mean per-step log e (reduced - generic) = {mean:.4f} (SE {se:.4f}), "
                          f"one-sided bound -3 SE = {-3 * se:.4f}")


# 8 -------------------------------------------------------------------------

def test_criterion_08_mixture_regret(verdict):
    rng = np.random.default_rng(8)
    worst_excess = -np.inf
    for k in (2, 3, 5, 8):
        for _ in range(200):
            state = MixtureState.start(k)
            for _ in range(40):
                evals = rng.choice([0.0, 0.3, 1.0, 2.5, 7.0], size=k, p=[0.02, 0.3, 0.3, 0.3, 0.08])
                _, state = mixture_step(state, evals)
                if np.isfinite(state.log_mixture_wealth):
                    worst_excess = max(worst_excess, state.regret() - math.log(k))
    bound_ok = worst_excess <= 1e-12
    tight = []
    for k in (2, 5, 8):
        # all wealth goes to one candidate at step 1; the rest are wiped out
        state = MixtureState.start(k)
        _, state = mixture_step(state, [float(k)] + [0.0] * (k - 1))
        for _ in range(10):
            _, state = mixture_step(state, [1.0] + [3.0] * (k - 1))
        tight.append(abs(state.regret() - math.log(k)))
    tight_ok = max(tight) <= 1e-12
    ok = bound_ok and tight_ok
    assert verdict(8, ok, f"max(regret - log k) over 800 paths = {worst_excess:.2e} <= 0; "
                          f"adversarial |regret - log k| = {max(tight):.1e}")


# 9 -------------------------------------------------------------------------

def test_criterion_09_gaussian_statistic_against_quadrature(verdict):
    worst = 0.0
    histories = {1: [(), (2,), (1, 2)], 2: [(), (3,), (1, 3)], 3: [(), (2,), (4, 4)]}
    for t0, hs in histories.items():
        for delta in (0.0, 0.5, 2.0):
            for obs in hs:
                mc = gaussian_statistic_reduced(GaussianAltConfig(delta, 10**6, seed=9), obs, t0)
                exact = gaussian_reduced_quadrature(t0, delta, obs)
                worst = max(worst, 0.5 * float(np.abs(mc - exact).sum()))
    m = 10**6
    closed = []
    for delta in (0.5, 2.0):
        p = norm.cdf(delta / math.sqrt(2))
        s = gaussian_statistic_reduced(GaussianAltConfig(delta, m, seed=19), (), 1)
        closed.append(abs(s[1] - p) / SE(p, m))
    ok = worst < 0.005 and max(closed) < 3
    assert verdict(9, ok, f"worst total variation {worst:.5f} < 0.005; closed form |z| = "
                          f"{', '.join(f'{z:.2f}' for z in closed)} < 3")


# 10 ------------------------------------------------------------------------

def test_criterion_10_fixed_t_exactness(verdict):
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(50):
        n_blank = int(rng.integers(2, 8))
        k = int(rng.integers(1, 4))
        if math.comb(n_blank + k, k) > 100:
            continue
        blanks, post = rng.standard_normal(n_blank), rng.standard_normal(k) + rng.normal(0, 1)
        exact = fixed_t_pvalue(blanks, post).p_value
        sampled = fixed_t_pvalue(blanks, post, mode="sampled", draws=100_000, rng=rng).p_value
        worst = max(worst, abs(exact - sampled))
    reps = 10_000
    draws = rng.standard_normal((reps, 12))
    rate = float(np.mean([fixed_t_pvalue(x[:9], x[9:]).p_value <= 0.05 for x in draws]))
    bound = 0.05 + 2 * SE(0.05, reps)
    ok = worst <= 0.01 and rate <= bound
    assert verdict(10, ok, f"max |sampled - exact| = {worst:.4f} <= 0.01; null P(p <= 0.05) = {rate:.4f} "
                           f"<= {bound:.4f}")


# 11 ------------------------------------------------------------------------

def test_criterion_11_utility_dominance_region(verdict):
    cfg = ExperimentConfig(scenario="did-iid", effect=1.5, t0=50, t_blank=25, horizon=20,
                           tests=("fixed_t", "av_gaussian", "av_plugin"), fixed_t_max_steps=20, replications=2000,
                           master_seed=11)
    res = run_experiment(cfg)
    threshold = dominance_threshold(res, "av_gaussian", range(1, 21))
    plugin = dominance_threshold(res, "av_plugin", range(1, 21))
    ok = threshold is not None and threshold <= 0.85 and abs(threshold - 0.80) <= 0.05
    assert verdict(11, ok, f"AV-Gaussian beats every fixed-T for delta >= {threshold} (target 0.80 +- 0.05); "
                           f"AV-plug-in threshold {plugin}")


# 12 ------------------------------------------------------------------------

def test_criterion_12_determinism(tmp_path, verdict, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("scenario = scm-var1\nt0 = 20\nhorizon = 15\nrho_lambda = 0.5\n"
                   "tests = fixed_t, repeated_fixed_t, av_gaussian, av_plugin, mix_adaptive\n"
                   "fixed_t_max_steps = 12\nmc_draws = 300\n")
    outs = []
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name), "--reps", "60",
                     "--seed", "12"]) == 0
        outs.append({f: (tmp_path / name / f).read_bytes() for f in ("results.csv", "curves.csv", "config.txt")})
    same_sim = outs[0] == outs[1]

    rng = np.random.default_rng(12)
    (tmp_path / "pre.csv").write_text("\n".join(repr(float(v)) for v in rng.standard_normal(20)) + "\n")
    ys = [repr(float(v)) for v in rng.standard_normal(25) + 0.8]
    (tmp_path / "all.txt").write_text("\n".join(ys) + "\n")
    (tmp_path / "one.txt").write_text("\n".join(ys[:9]) + "\n")
    (tmp_path / "two.txt").write_text("\n".join(ys[9:]) + "\n")
    base = ["monitor", "--pre", str(tmp_path / "pre.csv"), "--statistic", "mixture:effect=1.0,draws=500"]
    capsys.readouterr()
    assert main(base + ["--stream", str(tmp_path / "all.txt")]) == 0
    full = capsys.readouterr().out
    assert main(base + ["--stream", str(tmp_path / "one.txt"), "--checkpoint", str(tmp_path / "ck")]) == 0
    assert main(base + ["--stream", str(tmp_path / "two.txt"), "--checkpoint", str(tmp_path / "ck")]) == 0
    resumed = capsys.readouterr().out
    same_monitor = resumed == full and full.count("\n") == 26
    ok = same_sim and same_monitor
    assert verdict(12, ok, f"simulate outputs byte-identical: {same_sim}; monitor resume equals replay: "
                           f"{same_monitor}")
