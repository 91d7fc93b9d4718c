"""Experience store: record decisions, retrieve the best nearby ones.

Retrieval is two-stage: shortlist the nearest records by Euclidean
distance over the traffic-rate vector, then rank the shortlist by the
compliance index achieved, so the agent sees the *best* decisions made
under *similar* traffic — not merely the closest ones.

Run: python3 demos/03_experience_retrieval.py
"""
from sliceloop import ExperienceStore

store = ExperienceStore(n_slices=2)

history = [
    ([80.0, 80.0], (0.50, 0.50), -0.02),
    ([120.0, 80.0], (0.50, 0.50), -1.90),   # stayed at 50-50: bad outcome
    ([120.0, 80.0], (0.62, 0.38), -0.03),   # shifted to the latency slice
    ([118.0, 85.0], (0.60, 0.40), -0.05),
    ([80.0, 125.0], (0.35, 0.65), -0.04),
    ([85.0, 120.0], (0.50, 0.50), -1.20),
]
for rates, shares, sigma in history:
    store.record(
        arrival_rates_mbps=rates,
        allocation_shares=shares,
        resulting_sigma=sigma,
        kpm_summary=[{}, {}],
        created_at_interval=len(store.records),
    )

query = [121.0, 82.0]
print(f"Query traffic: {query} Mbps")
print()
print("Top 3 retrieved experiences (best sigma among the nearest):")
for rec in store.retrieve(query, k=3):
    print(f"  rates {list(rec.arrival_rates_mbps)} "
          f"shares {list(rec.allocation_shares)} sigma {rec.resulting_sigma:+.2f}")
print()
print("Note record 1 (same traffic, bad sigma) ranks below record 2: "
      "distance shortlists, sigma decides.")
