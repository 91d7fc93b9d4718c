"""What the violation gate saves in decision-backend tokens.

Runs the step-traffic scenario twice on the same seed: once with the
SLA-violation gate (the backend is consulted only when a slice is at
risk) and once consulting the backend every cycle.  The KPM outcomes
are equivalent; the token bill is not.

Run: python3 demos/06_token_budget.py  (about 2 s)
"""
from sliceloop import HarnessConfig, run_token_comparison

comparison = run_token_comparison(HarnessConfig(), backend_name="oracle", seed=42)

gated = comparison["gated"]["summary"]
ungated = comparison["ungated"]["summary"]
g = comparison["gated_cumulative"]
u = comparison["ungated_cumulative"]

print(f"{'cycle':>5} {'gated tokens':>13} {'ungated tokens':>15}")
for i in range(0, len(g), 5):
    print(f"{i:>5} {g[i]:>13} {u[i]:>15}")
print(f"{len(g) - 1:>5} {g[-1]:>13} {u[-1]:>15}")

print()
print(f"gated:   {gated['backend_call_count']:3d} backend calls, "
      f"{g[-1]:6d} tokens")
print(f"ungated: {ungated['backend_call_count']:3d} backend calls, "
      f"{u[-1]:6d} tokens")
print(f"savings: {1 - g[-1] / u[-1]:.0%} of the token budget, "
      f"same settled KPMs.")
