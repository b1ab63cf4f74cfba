"""End-to-end runs: load a corpus, build example sets, train, evaluate, ablate.

Everything here is deterministic for a fixed ``RunConfig``.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import gbdt, lasso
from .dataset import ExampleSet, classification_set, positives, split
from .features import FeatureMask
from .ingest import IngestReport, load_trips, preset, read_stations
from .metrics import classification_metrics, regression_metrics
from .model import StationRegistry, TripTable

logger = logging.getLogger(__name__)

ABLATION_MASKS = (FeatureMask.ALL, FeatureMask.USER, FeatureMask.STATION, FeatureMask.TIME)
TASKS = ("destination", "duration")


@dataclass(frozen=True)
class RunConfig:
    trips: tuple = ()
    stations: str = ""
    preset: str = "default"
    seed: int = 0
    mask: str = "all"
    gbdt: gbdt.GbdtConfig = gbdt.GbdtConfig()
    lasso: lasso.LassoConfig = lasso.LassoConfig()
    # Departure-time window for negatives, ISO strings; empty means the corpus' own span.
    negative_time_range: tuple = ()
    out: str = "out"
    k: int = 10
    year: Optional[int] = None
    bin_width_km: float = 0.25

    def __post_init__(self):
        FeatureMask(self.mask)
        preset(self.preset)
        object.__setattr__(self, "trips", tuple(str(p) for p in self.trips))
        object.__setattr__(self, "negative_time_range", tuple(self.negative_time_range))
        if self.negative_time_range and len(self.negative_time_range) != 2:
            raise ValueError("negative_time_range needs exactly two timestamps")

    @property
    def feature_mask(self) -> FeatureMask:
        return FeatureMask(self.mask)

    @property
    def gbdt_config(self) -> gbdt.GbdtConfig:
        return replace(self.gbdt, seed=self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trips"] = list(self.trips)
        d["negative_time_range"] = list(self.negative_time_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "gbdt" in d and isinstance(d["gbdt"], dict):
            d["gbdt"] = gbdt.GbdtConfig(**d["gbdt"])
        if "lasso" in d and isinstance(d["lasso"], dict):
            d["lasso"] = lasso.LassoConfig(**d["lasso"])
        return cls(**d)

    def provenance(self) -> dict:
        """The config as embedded in result documents (the output directory is not part of a result)."""
        d = self.to_dict()
        d.pop("out")
        return d


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def input_fingerprint(cfg: RunConfig) -> dict:
    files = [cfg.stations, *cfg.trips]
    digests = {str(p): file_sha256(p) for p in files}
    combined = hashlib.sha256("".join(digests[str(p)] for p in files).encode()).hexdigest()
    return {"files": digests, "sha256": combined}


@dataclass
class Corpus:
    registry: StationRegistry
    trips: TripTable
    station_report: IngestReport
    trip_reports: list = field(default_factory=list)


def check_inputs(cfg: RunConfig):
    if not cfg.stations:
        raise FileNotFoundError("no station file given")
    if not cfg.trips:
        raise FileNotFoundError("no trip files given")
    for p in (cfg.stations, *cfg.trips):
        if not Path(p).is_file():
            raise FileNotFoundError(f"input file not found: {p}")


def load_corpus(cfg: RunConfig) -> Corpus:
    check_inputs(cfg)
    cmap = preset(cfg.preset)
    registry, station_report = read_stations(cfg.stations, cmap)
    tables, reports = [], []
    for p in cfg.trips:
        table, report = load_trips(p, cmap, registry)
        tables.append(table)
        reports.append(report)
    return Corpus(registry, TripTable.concat(tables), station_report, reports)


def _time_range(cfg: RunConfig):
    if not cfg.negative_time_range:
        return None
    return tuple(np.datetime64(t, "s") for t in cfg.negative_time_range)


@dataclass
class TrainResult:
    task: str
    mask: FeatureMask
    model: object
    metrics: dict
    n_train: int
    n_test: int


def train_destination(examples: ExampleSet, cfg: RunConfig, mask: FeatureMask) -> TrainResult:
    """Fit the classifier on the earliest 4/5 of pooled positives+negatives, score the rest."""
    ex = examples.with_mask(mask)
    train, test = split(ex)
    model = gbdt.fit(train.matrix(), train.label, cfg.gbdt_config, feature_names=mask.names)
    pred = model.classify(test.matrix()) if len(test) else np.array([], np.int8)
    report = classification_metrics(pred, test.label).to_dict() if len(test) else {}
    return TrainResult("destination", mask, model, report, len(train), len(test))


def train_duration(examples: ExampleSet, cfg: RunConfig, mask: FeatureMask) -> TrainResult:
    """Fit Lasso on the earliest 4/5 of positives (seconds), report MAE in minutes on the rest."""
    ex = examples.with_mask(mask)
    train, test = split(ex)
    model = lasso.fit(train.matrix(), train.duration, cfg.lasso, feature_names=mask.names)
    report = {}
    if len(test):
        pred = model.predict(test.matrix())
        report = regression_metrics(pred / 60.0, test.duration / 60.0).to_dict()
    report["alpha"] = model.alpha
    report["alpha_max"] = model.alpha_max
    report["n_nonzero"] = model.n_nonzero
    report["converged"] = model.converged
    return TrainResult("duration", mask, model, report, len(train), len(test))


def destination_examples(corpus: Corpus, cfg: RunConfig) -> ExampleSet:
    return classification_set(corpus.trips, corpus.registry, cfg.seed, _time_range(cfg))


def duration_examples(corpus: Corpus) -> ExampleSet:
    return positives(corpus.trips, corpus.registry)


def train(corpus: Corpus, cfg: RunConfig, task: str) -> TrainResult:
    if task == "destination":
        return train_destination(destination_examples(corpus, cfg), cfg, cfg.feature_mask)
    if task == "duration":
        return train_duration(duration_examples(corpus), cfg, cfg.feature_mask)
    raise ValueError(f"unknown task {task!r}; choose from {TASKS}")


def ablate(corpus: Corpus, cfg: RunConfig, tasks=TASKS) -> list[dict]:
    """One row per (task, mask) over the four feature groupings."""
    rows = []
    for task in tasks:
        if task == "destination":
            ex = destination_examples(corpus, cfg)
            runner = train_destination
        else:
            ex = duration_examples(corpus)
            runner = train_duration
        for mask in ABLATION_MASKS:
            res = runner(ex, cfg, mask)
            logger.info("%s/%s: %s", task, mask.value, res.metrics)
            rows.append({"task": task, "mask": mask.value, "n_train": res.n_train, "n_test": res.n_test,
                         **res.metrics})
    return rows


def mask_for_names(names) -> FeatureMask:
    for m in FeatureMask:
        if tuple(names) == m.names:
            return m
    raise ValueError(f"feature names {list(names)} match no feature mask")


def model_document(result: TrainResult, cfg: RunConfig, fingerprint: dict) -> dict:
    return {
        "task": result.task,
        "mask": result.mask.value,
        "model": result.model.to_dict(),
        "run_config": cfg.provenance(),
        "inputs": fingerprint,
    }


def load_model_document(path):
    with open(path) as f:
        doc = json.load(f)
    task = doc.get("task")
    if task == "destination":
        model = gbdt.GbdtModel.from_dict(doc["model"])
    elif task == "duration":
        model = lasso.LassoModel.from_dict(doc["model"])
    else:
        raise ValueError(f"{path}: not a model file (task={task!r})")
    return task, FeatureMask(doc["mask"]), model


def to_json(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not JSON serializable: {type(o).__name__}")

    return json.dumps(obj, indent=2, default=default)


def write_json(path, obj):
    Path(path).write_text(to_json(obj) + "\n")


def write_rows_csv(path, rows: list[dict]):
    columns = []
    for r in rows:
        columns.extend(k for k in r if k not in columns)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if r.get(k) is None else r.get(k) for k in columns})
