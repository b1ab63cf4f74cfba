"""
Who rides, when, how long and how far
=====================================

A walk through the descriptive reports on a synthetic corpus. Swap in
``tripforge.ingest.load_trips`` to run the same steps on real files.
"""

import numpy as np

from tripforge import analysis
from tripforge.synth import synth_corpus

registry, trips = synth_corpus(seed=7, n_trips=20_000, n_stations=60)
print(f"{len(trips)} trips between {len(registry)} stations")

# Rider mix. Fractions are shares of all trips.
comp = analysis.composition(trips)
for name, frac in comp.fractions.items():
    print(f"  {name:<17} {frac:6.1%}")

# Weekly cycle, Sunday first.
temporal = analysis.temporal(trips, year=2014)
for name in ("Customer", "MaleSubscriber"):
    week = np.array(temporal.per_weekday[name])
    print(f"  {name:<15} weekend share {(week[0] + week[6]) / week.sum():.2f}", week.tolist())

# Rush hours show up in the subscriber hourly profile.
hours = np.array(temporal.per_hour["MaleSubscriber"])
print("  busiest subscriber hours:", np.argsort(-hours)[:3].tolist())

dur = analysis.durations(trips)
print(f"mean trip {dur.mean_minutes:.2f} min")
for i, label in enumerate(dur.bins):
    print(f"  {label:>7}", sum(c[i] for c in dur.counts.values()))

spatial = analysis.spatial(trips, registry, k=3)
print("mean distance (KM):", {k: round(v, 2) for k, v in spatial.mean_km.items() if v is not None})
print("top pairs:", [(p["origin"], p["destination"], p["count"]) for p in spatial.top_pairs["All"]])

balance = analysis.usage_balance(trips, registry)
print(f"more out {balance.more_checked_out}, more in {balance.more_returned}, "
      f"balanced {balance.balanced_ids}, idle {balance.inactive}")
