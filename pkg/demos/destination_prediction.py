"""
Predicting where a trip ends
============================

Real trips are positives, random (rider, stations, time) tuples are
negatives. A boosted tree ensemble learns to tell them apart, and its
probabilities then rank every station as a candidate destination.
"""

import datetime as dt

from tripforge import gbdt
from tripforge.dataset import classification_set, split
from tripforge.metrics import classification_metrics
from tripforge.model import Gender, UserCategory
from tripforge.synth import synth_corpus

registry, trips = synth_corpus(seed=3, n_trips=10_000, n_stations=40)

examples = classification_set(trips, registry, seed=3)
train, test = split(examples)  # earliest 80% train, the rest test
print(f"train {len(train)}  test {len(test)}  positives {int(examples.label.sum())}")

config = gbdt.GbdtConfig(n_trees=40, max_depth=4, learning_rate=0.2)
model = gbdt.fit(train.matrix(), train.label, config)
print("training deviance:", [round(d, 3) for d in model.train_deviance[::10]])

report = classification_metrics(model.classify(test.matrix()), test.label)
print(f"accuracy {report.accuracy:.3f}  precision {report.precision:.3f}  "
      f"recall {report.recall:.3f}  f1 {report.f1:.3f}")

# Rank destinations for one rider leaving station 5 on a weekday morning.
rider = UserCategory.subscriber(Gender.FEMALE, 1987)
ranked = gbdt.rank_destinations(model, rider, dt.datetime(2014, 9, 16, 8, 10), 5, registry)
for station_id, p in ranked[:5]:
    print(f"  {station_id:>3} {registry[station_id].name:<12} {p:.3f}")

# The model serializes to plain JSON and reloads to identical predictions.
again = gbdt.GbdtModel.from_json(model.to_json())
assert (again.predict_score(test.matrix()) == model.predict_score(test.matrix())).all()
