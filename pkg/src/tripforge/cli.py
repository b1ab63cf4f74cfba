"""tripforge command line.

Exit codes: 0 success, 2 usage or input error, 3 internal error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, gbdt
from .features import FeatureMask, feature_matrix
from .ingest import PRESETS, load_stations, load_trips, preset, read_stations, write_stations_csv, write_trips_csv
from .model import Gender, UserCategory
from .pipeline import (
    TASKS,
    RunConfig,
    ablate,
    check_inputs,
    input_fingerprint,
    load_corpus,
    load_model_document,
    model_document,
    train,
    write_json,
    write_rows_csv,
)
from .synth import synth_corpus

logger = logging.getLogger("tripforge")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3


class InputError(Exception):
    """Bad user input; reported without a traceback and exit code 2."""


def _add_run_flags(p: argparse.ArgumentParser, *, trips=True, model=True):
    p.add_argument("--config", help="JSON run config; flags override its values")
    if trips:
        p.add_argument("--trips", nargs="+", help="trip CSV files")
    p.add_argument("--stations", help="station CSV file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="column layout preset")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    if model:
        p.add_argument("--mask", choices=[m.value for m in FeatureMask])
        p.add_argument("--alpha", type=float, help="Lasso penalty weight (default 0.01 * alpha_max)")
        p.add_argument("--trees", type=int)
        p.add_argument("--lr", type=float, help="boosting learning rate")
        p.add_argument("--depth", type=int)
        p.add_argument("--subsample", type=float)
        p.add_argument("--min-leaf", type=int, dest="min_leaf")
        p.add_argument("--negative-range", nargs=2, metavar=("START", "END"), dest="negative_range",
                       help="departure window for negative samples, ISO timestamps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tripforge", description="Bike-share trip analysis and prediction.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate input files and write ingest reports")
    _add_run_flags(p, model=False)
    p.add_argument("--reject-log", action="store_true", help="write rejected line numbers beside the reports")

    p = sub.add_parser("analyze", help="descriptive reports (JSON + CSV)")
    _add_run_flags(p, model=False)
    p.add_argument("--k", type=int, help="top-k stations and pairs")
    p.add_argument("--year", type=int, help="calendar year of the per-day and per-month views")
    p.add_argument("--bin-width", type=float, dest="bin_width", help="distance histogram bin width, KM")

    p = sub.add_parser("train", help="train and evaluate one model")
    _add_run_flags(p)
    p.add_argument("--task", choices=TASKS, required=True)

    p = sub.add_parser("ablate", help="train both tasks under all four feature masks")
    _add_run_flags(p)
    p.add_argument("--task", choices=TASKS, action="append", help="restrict to a task (repeatable)")

    p = sub.add_parser("predict", help="rank destinations for one departing rider")
    p.add_argument("--model", required=True, help="destination model.json from `train --task destination`")
    p.add_argument("--duration-model", help="duration model.json from `train --task duration`")
    p.add_argument("--stations", required=True)
    p.add_argument("--preset", choices=sorted(PRESETS), default="default")
    p.add_argument("--origin", type=int, required=True)
    p.add_argument("--start", required=True, help="departure time, ISO format (YYYY-MM-DD HH:MM)")
    p.add_argument("--user-type", choices=["subscriber", "customer"], default="subscriber", dest="user_type")
    p.add_argument("--gender", choices=["male", "female", "unknown"], default="unknown")
    p.add_argument("--birth-year", type=int, dest="birth_year")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")

    p = sub.add_parser("synth", help="write a synthetic station + trip corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-trips", type=int, default=10_000, dest="n_trips")
    p.add_argument("--n-stations", type=int, default=50, dest="n_stations")
    p.add_argument("--out", required=True)
    return parser


def resolve_config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read config {args.config}: {e}") from None
    try:
        cfg = RunConfig.from_dict(base)
    except (TypeError, ValueError) as e:
        raise InputError(f"bad config: {e}") from None
    flags = {
        "trips": getattr(args, "trips", None),
        "stations": getattr(args, "stations", None),
        "preset": getattr(args, "preset", None),
        "seed": getattr(args, "seed", None),
        "out": getattr(args, "out", None),
        "mask": getattr(args, "mask", None),
        "k": getattr(args, "k", None),
        "year": getattr(args, "year", None),
        "bin_width_km": getattr(args, "bin_width", None),
        "negative_time_range": getattr(args, "negative_range", None),
    }
    updates = {k: v for k, v in flags.items() if v is not None}
    g = {"n_trees": getattr(args, "trees", None), "learning_rate": getattr(args, "lr", None),
         "max_depth": getattr(args, "depth", None), "subsample": getattr(args, "subsample", None),
         "min_samples_leaf": getattr(args, "min_leaf", None)}
    g = {k: v for k, v in g.items() if v is not None}
    try:
        if g:
            updates["gbdt"] = replace(cfg.gbdt, **g)
        if getattr(args, "alpha", None) is not None:
            updates["lasso"] = replace(cfg.lasso, alpha=args.alpha)
        return replace(cfg, **updates)
    except (TypeError, ValueError) as e:
        raise InputError(str(e)) from None


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise InputError(f"cannot create output directory {out}: {e}") from None
    return out


def _load(cfg: RunConfig):
    try:
        check_inputs(cfg)
    except FileNotFoundError as e:
        raise InputError(str(e)) from None
    try:
        corpus = load_corpus(cfg)
    except (OSError, ValueError, UnicodeDecodeError) as e:
        raise InputError(str(e)) from None
    return corpus, input_fingerprint(cfg)


def cmd_ingest(args) -> int:
    cfg = resolve_config(args)
    try:
        check_inputs(cfg)
    except FileNotFoundError as e:
        raise InputError(str(e)) from None
    cmap = preset(cfg.preset)
    try:
        registry, srep = read_stations(cfg.stations, cmap)
        trip_reports = [load_trips(path, cmap, registry)[1] for path in cfg.trips]
    except (OSError, ValueError, UnicodeDecodeError) as e:
        raise InputError(str(e)) from None
    out = _prepare_out(cfg)
    reports = [srep.to_dict()] + [r.to_dict() for r in trip_reports]
    if args.reject_log:
        srep.write_reject_log(out / "rejected_stations.csv")
        for i, (path, rep) in enumerate(zip(cfg.trips, trip_reports)):
            rep.write_reject_log(out / f"rejected_{i}_{Path(path).stem}.csv")
    write_json(out / "ingest.json", {"reports": reports, "run_config": cfg.provenance(),
                                     "inputs": input_fingerprint(cfg)})
    for r in reports:
        print(f"{r['path']}: read {r['rows_read']}, accepted {r['rows_accepted']}, rejected {r['rows_rejected']}")
    return EXIT_OK


def _default_year(trips) -> int | None:
    if not len(trips):
        return None
    years, counts = np.unique(trips.start_year, return_counts=True)
    return int(years[np.argmax(counts)])


def cmd_analyze(args) -> int:
    cfg = resolve_config(args)
    corpus, fingerprint = _load(cfg)
    trips, registry = corpus.trips, corpus.registry
    year = cfg.year if cfg.year is not None else _default_year(trips)
    reports = {
        "composition": analysis.composition(trips),
        "temporal": analysis.temporal(trips, year),
        "durations": analysis.durations(trips),
        "spatial": analysis.spatial(trips, registry, cfg.k, cfg.bin_width_km),
        "balance": analysis.usage_balance(trips, registry),
    }
    out = _prepare_out(cfg)
    provenance = {"run_config": cfg.provenance(), "inputs": fingerprint}
    for name, rep in reports.items():
        write_json(out / f"{name}.json", {**rep.to_dict(), **provenance})
        write_rows_csv(out / f"{name}.csv", rep.to_rows())
    write_json(out / "run_config.json", cfg.to_dict())
    print(f"wrote {len(reports)} reports for {len(trips)} trips to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    corpus, fingerprint = _load(cfg)
    out = _prepare_out(cfg)
    result = train(corpus, cfg, args.task)
    write_json(out / "model.json", model_document(result, cfg, fingerprint))
    write_json(out / "metrics.json", {
        "task": result.task, "mask": result.mask.value, "n_train": result.n_train, "n_test": result.n_test,
        "metrics": result.metrics, "run_config": cfg.provenance(), "inputs": fingerprint,
    })
    write_json(out / "run_config.json", cfg.to_dict())
    print(json.dumps(result.metrics))
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = resolve_config(args)
    corpus, fingerprint = _load(cfg)
    out = _prepare_out(cfg)
    tasks = tuple(args.task) if args.task else TASKS
    rows = ablate(corpus, cfg, tasks)
    write_json(out / "ablation.json", {"rows": rows, "run_config": cfg.provenance(), "inputs": fingerprint})
    write_rows_csv(out / "ablation.csv", rows)
    write_json(out / "run_config.json", cfg.to_dict())
    for r in rows:
        shown = {k: v for k, v in r.items() if k in ("accuracy", "precision", "recall", "f1", "mae", "r2")}
        print(r["task"], r["mask"], json.dumps(shown))
    return EXIT_OK


def predict_rows(dest_model, dest_mask, duration, registry, user: UserCategory, start: dt.datetime,
                 origin: int, k: int) -> list[dict]:
    if origin not in registry:
        raise InputError(f"unknown origin station {origin}")
    ranked = gbdt.rank_destinations(dest_model, user, start, origin, registry, dest_mask)[:max(k, 0)]
    rows = []
    if not ranked:
        return rows
    ids = np.array([sid for sid, _ in ranked])
    est = None
    if duration is not None:
        dur_model, dur_mask = duration
        n = len(ids)
        X = feature_matrix(np.full(n, int(user.kind)), np.full(n, int(user.gender)),
                           np.full(n, user.birth_year or 0), np.full(n, np.datetime64(start, "s")),
                           np.full(n, origin), ids, registry)
        est = np.atleast_1d(dur_model.predict(dur_mask.apply(X)))
    for i, (sid, proba) in enumerate(ranked):
        row = {"station_id": sid, "name": registry[sid].name, "probability": proba}
        if est is not None:
            secs = float(est[i])
            row["duration_seconds"] = secs
            row["duration_minutes"] = secs / 60.0
            row["arrival_time"] = (start + dt.timedelta(seconds=secs)).isoformat(sep=" ")
        rows.append(row)
    return rows


def cmd_predict(args) -> int:
    try:
        task, mask, model = load_model_document(args.model)
        duration = None
        if args.duration_model:
            dtask, dmask, dmodel = load_model_document(args.duration_model)
            if dtask != "duration":
                raise InputError(f"{args.duration_model} is a {dtask} model, expected duration")
            duration = (dmodel, dmask)
        registry = load_stations(args.stations, preset(args.preset))
    except (OSError, ValueError, KeyError) as e:
        raise InputError(str(e)) from None
    if task != "destination":
        raise InputError(f"{args.model} is a {task} model, expected destination")
    try:
        start = dt.datetime.fromisoformat(args.start)
    except ValueError:
        raise InputError(f"bad --start {args.start!r}; use YYYY-MM-DD HH:MM") from None
    if args.user_type == "customer":
        user = UserCategory.customer()
    else:
        user = UserCategory.subscriber(Gender[args.gender.upper()], args.birth_year)
    rows = predict_rows(model, mask, duration, registry, user, start, args.origin, args.k)
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            line = f"{r['station_id']:>6}  {r['probability']:.4f}  {r['name']}"
            if "duration_minutes" in r:
                line += f"  {r['duration_minutes']:.1f} min  arrive {r['arrival_time']}"
            print(line)
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    try:
        registry, trips = synth_corpus(args.seed, args.n_trips, args.n_stations)
    except ValueError as e:
        raise InputError(str(e)) from None
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_stations_csv(registry, out / "stations.csv")
        write_trips_csv(trips, out / "trips.csv", registry)
    except OSError as e:
        raise InputError(f"cannot write to {out}: {e}") from None
    print(f"wrote {len(registry)} stations and {len(trips)} trips to {out}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "analyze": cmd_analyze,
    "train": cmd_train,
    "ablate": cmd_ablate,
    "predict": cmd_predict,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as e:
        print(f"tripforge: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
