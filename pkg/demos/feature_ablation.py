"""
Which feature group matters
===========================

Both models are retrained on user-only, time-only and station-only inputs
and compared with the full feature vector.
"""

from dataclasses import replace

from tripforge.gbdt import GbdtConfig
from tripforge.pipeline import Corpus, RunConfig, ablate
from tripforge.synth import synth_corpus

registry, trips = synth_corpus(seed=11, n_trips=8_000, n_stations=40)
corpus = Corpus(registry, trips, station_report=None)
config = replace(RunConfig(), gbdt=GbdtConfig(n_trees=30, max_depth=4))

for row in ablate(corpus, config):
    if row["task"] == "destination":
        print(f"destination  {row['mask']:<8} accuracy {row['accuracy']:.3f}  f1 {row['f1']:.3f}")
    else:
        print(f"duration     {row['mask']:<8} MAE {row['mae']:.2f} min  R2 {row['r2']:.3f}")
