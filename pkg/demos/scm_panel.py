"""From a raw panel to a sequential verdict.

Simulate a factor-model panel with a treated unit, fit synthetic-control
weights on the training periods, average the estimates in blocks of three
periods and feed the post blocks to the rank test. The single fixed-T
permutation p-value at block 12 is printed for comparison.

    python demos/scm_panel.py
"""
import numpy as np

from avrank import SequentialRankTest
from avrank.alternatives import GaussianReducedStatistic
from avrank.fixedt import fixed_t_pvalue
from avrank.panel import IfeConfig, block_aggregate, scm_estimates, scm_weights, simulate_ife

B = 3
cfg = IfeConfig(n_controls=20, t_total=150, t0=60, t_blank=30, r_factors=2, rho_lambda=0.75, rho_eps=0.5,
                effect=0.7, seed=11)
panel = simulate_ife(cfg)
weights = scm_weights(panel)
est = block_aggregate(scm_estimates(panel, weights), B)
blank = est.tau_hat[est.phase == "blank"]
post = est.tau_hat[est.phase == "post"]
print(f"{np.count_nonzero(weights > 1e-6)} controls with weight; {blank.size} blank blocks, {post.size} post blocks")

# effect per block in noise units: the block mean shrinks the noise by sqrt(B)
test = SequentialRankTest(blank, GaussianReducedStatistic(0.7 * np.sqrt(B) / np.sqrt(1 + 1 / 20), 10_000, seed=3),
                          seed=4)
for r in test.run(post):
    print(f"block {r.t - blank.size:2d}  estimate {post[r.t - blank.size - 1]:6.2f}  e={r.e_value:6.3f}  "
          f"W={np.exp(r.log_wealth):8.3f}")
    if r.rejected:
        print("rejected: stop here")
        break
print("fixed-T p-value after 12 blocks:", fixed_t_pvalue(blank, post[:12]).p_value)
