"""When is waiting for a fixed horizon worse than testing sequentially?

Runs the DiD power design, then reports for each anytime-valid test the
smallest discount factor above which it beats every fixed-T horizon 1..20.

    python demos/utility_region.py [replications]
"""
import sys
from pathlib import Path

from avrank.harness import dominance_threshold, load_config, run_experiment

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 500
cfg = load_config(Path(__file__).parent / "configs" / "did_power.cfg", replications=reps)
result = run_experiment(cfg)
for tag in ("av_gaussian", "av_plugin", "mix_adaptive", "mix_average"):
    print(f"{tag:12s} rate by step 20 = {result.rate(tag):.3f}  dominates fixed-T for delta >= "
          f"{dominance_threshold(result, tag, range(1, 21))}")
