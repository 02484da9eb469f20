"""Watch a stream of treatment estimates with the anytime-valid rank test.

Twenty pre-treatment blank estimates come first. Post estimates then arrive one
at a time; the test may be checked after every arrival and stopped whenever.

    python demos/stream_monitor.py
"""
import numpy as np

from avrank import SequentialRankTest
from avrank.alternatives import GaussianReducedStatistic, PluginReducedStatistic

rng = np.random.default_rng(0)
blank = rng.standard_normal(20)
post = rng.standard_normal(40) + 1.0    # true effect of one noise sd

for name, strategy in [("gaussian", GaussianReducedStatistic(1.0, 10_000, seed=1)),
                       ("plug-in", PluginReducedStatistic(seed=1))]:
    test = SequentialRankTest(blank, strategy, alpha=0.05, seed=2)
    for report in test.run(post):
        if report.rejected:
            break
    print(f"{name:9s} stopped at t={report.t}  rejected={report.rejected}  "
          f"log wealth={report.log_wealth:.2f}  p={report.p_value:.4f}")
