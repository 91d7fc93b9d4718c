"""Adaptive control vs fixed splits over random traffic draws.

A scaled-down version of the paired study: each trial draws constant
per-slice rates from a grid, then runs the adaptive loop and each fixed
split on identical traffic.  The adaptive policy keeps both the latency
slice's SLA and the throughput slice's drop ratio healthy at once; any
single fixed split sacrifices one side somewhere on the grid.

Run: python3 demos/05_policy_comparison.py  (about 30 s)
"""
import numpy as np

from sliceloop import HarnessConfig, run_scenario2

config = HarnessConfig()  # full 106-RB system
trials = 10

print(f"Running {trials} paired trials (adaptive + 3 fixed splits each)...")
results = run_scenario2(config, trials=trials, backend_name="oracle", seed=42)

print()
print(f"{'policy':>12} {'S1 p95 lat ms':>14} {'S2 mean drop':>13} "
      f"{'trials >10% drop':>17}")
for policy, data in results["policies"].items():
    p95 = float(np.percentile(data["s1_latency_ms"], 95))
    drop = float(np.mean(data["s2_drop_ratio"]))
    bad = sum(1 for d in data["trial_max_s2_drop"] if d > 0.10)
    print(f"{policy:>12} {p95:>14.2f} {drop:>13.4f} {bad:>17}")

print()
print("fixed_50_50 protects S2 but lets S1 latency spike on S1-heavy draws;")
print("fixed_70_30 protects S1 but drops S2 traffic on S2-heavy draws;")
print("the adaptive loop moves capacity to whichever slice needs it.")
