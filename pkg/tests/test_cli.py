import csv
import datetime as dt
import json

import pytest

from tripforge import cli
from tripforge.ingest import load_stations

FAST = ["--trees", "5", "--depth", "3"]


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert cli.main(["synth", "--seed", "4", "--n-trips", "3000", "--n-stations", "12", "--out", str(d)]) == 0
    return d


def inputs(corpus):
    return ["--trips", str(corpus / "trips.csv"), "--stations", str(corpus / "stations.csv")]


@pytest.fixture(scope="module")
def trained(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("models")
    assert cli.main(["train", "--task", "destination", *inputs(corpus), *FAST, "--out", str(out / "dest")]) == 0
    assert cli.main(["train", "--task", "duration", *inputs(corpus), "--out", str(out / "dur")]) == 0
    return out


def test_synth_then_ingest(corpus, tmp_path, capsys):
    assert cli.main(["ingest", *inputs(corpus), "--out", str(tmp_path), "--reject-log"]) == 0
    doc = json.loads((tmp_path / "ingest.json").read_text())
    stations, trips = doc["reports"]
    assert stations["rows_accepted"] == 12 and stations["rows_rejected"] == 0
    assert trips["rows_accepted"] == 3000 and trips["rows_rejected"] == 0
    assert "sha256" in doc["inputs"]


def test_synth_seeds_differ(tmp_path):
    for seed in ("1", "2"):
        assert cli.main(["synth", "--seed", seed, "--n-trips", "200", "--n-stations", "5",
                         "--out", str(tmp_path / seed)]) == 0
    assert (tmp_path / "1" / "trips.csv").read_bytes() != (tmp_path / "2" / "trips.csv").read_bytes()


def test_synth_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["synth", "--n-trips", "10", "--out", str(blocker / "sub")]) == 2
    assert cli.main(["synth", "--n-stations", "1", "--out", str(tmp_path / "s")]) == 2


def test_analyze(corpus, tmp_path):
    out = tmp_path / "an"
    assert cli.main(["analyze", *inputs(corpus), "--out", str(out), "--k", "3"]) == 0
    for name in ("composition", "temporal", "durations", "spatial", "balance"):
        doc = json.loads((out / f"{name}.json").read_text())
        assert doc["run_config"]["k"] == 3 and "inputs" in doc
        with open(out / f"{name}.csv") as f:
            assert len(list(csv.DictReader(f))) > 0
    comp = json.loads((out / "composition.json").read_text())
    assert sum(comp["counts"].values()) == 3000
    bal = json.loads((out / "balance.json").read_text())
    assert sum(s["checked_out"] for s in bal["stations"]) == 3000
    assert json.loads((out / "run_config.json").read_text())["out"] == str(out)


def test_missing_input_no_outputs(corpus, tmp_path):
    out = tmp_path / "never"
    code = cli.main(["analyze", "--trips", str(tmp_path / "nope.csv"), "--stations",
                     str(corpus / "stations.csv"), "--out", str(out)])
    assert code == 2
    assert not out.exists()


def test_bad_header_is_input_error(corpus, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    out = tmp_path / "o"
    assert cli.main(["analyze", "--trips", str(bad), "--stations", str(corpus / "stations.csv"),
                     "--out", str(out)]) == 2
    assert not out.exists()


def test_usage_error():
    assert cli.main(["train", "--mask", "everything"]) == 2
    assert cli.main([]) == 2


def test_internal_error(corpus, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "train", boom)
    assert cli.main(["train", "--task", "duration", *inputs(corpus), "--out", str(tmp_path)]) == 3


def test_train_outputs(trained):
    dest = json.loads((trained / "dest" / "metrics.json").read_text())
    assert {"accuracy", "precision", "recall", "f1"} <= set(dest["metrics"])
    assert dest["run_config"]["gbdt"]["n_trees"] == 5
    assert dest["n_train"] == 4800 and dest["n_test"] == 1200
    dur = json.loads((trained / "dur" / "metrics.json").read_text())
    assert {"mae", "r2"} <= set(dur["metrics"])
    model = json.loads((trained / "dest" / "model.json").read_text())
    assert model["task"] == "destination" and len(model["model"]["trees"]) == 5


def test_train_deterministic(corpus, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["train", "--task", "destination", *inputs(corpus), *FAST, "--seed", "3",
                         "--out", str(tmp_path / name)]) == 0
    for f in ("metrics.json", "model.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_config_file_and_flag_precedence(corpus, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trips": [str(corpus / "trips.csv")], "stations": str(corpus / "stations.csv"),
                               "mask": "time", "gbdt": {"n_trees": 2, "max_depth": 2}, "seed": 1}))
    out = tmp_path / "run"
    assert cli.main(["train", "--task", "destination", "--config", str(cfg), "--trees", "3",
                     "--out", str(out)]) == 0
    doc = json.loads((out / "metrics.json").read_text())
    assert doc["mask"] == "time"
    assert doc["run_config"]["gbdt"]["n_trees"] == 3 and doc["run_config"]["gbdt"]["max_depth"] == 2
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["train", "--task", "duration", "--config", str(cfg), "--out", str(out)]) == 2


def test_ablate(corpus, tmp_path):
    out = tmp_path / "ab"
    assert cli.main(["ablate", *inputs(corpus), *FAST, "--out", str(out)]) == 0
    rows = json.loads((out / "ablation.json").read_text())["rows"]
    for task in ("destination", "duration"):
        assert [r["mask"] for r in rows if r["task"] == task] == ["all", "user", "station", "time"]
    with open(out / "ablation.csv") as f:
        assert len(list(csv.DictReader(f))) == 8


def predict(capsys, trained, corpus, *extra):
    code = cli.main(["predict", "--model", str(trained / "dest" / "model.json"),
                     "--duration-model", str(trained / "dur" / "model.json"),
                     "--stations", str(corpus / "stations.csv"), "--start", "2014-07-15 08:15",
                     "--gender", "female", "--birth-year", "1988", "--json", *extra])
    return code, capsys.readouterr().out


def test_predict_rows(trained, corpus, capsys):
    code, out = predict(capsys, trained, corpus, "--origin", "3", "--k", "1")
    assert code == 0
    rows = json.loads(out)
    assert len(rows) == 1
    code, out = predict(capsys, trained, corpus, "--origin", "3", "--k", "50")
    rows = json.loads(out)
    assert len(rows) == len(load_stations(corpus / "stations.csv"))
    start = dt.datetime(2014, 7, 15, 8, 15)
    for r in rows:
        assert dt.datetime.fromisoformat(r["arrival_time"]) == start + dt.timedelta(seconds=r["duration_seconds"])
        assert r["duration_minutes"] == r["duration_seconds"] / 60
    probs = [r["probability"] for r in rows]
    assert probs == sorted(probs, reverse=True)


def test_predict_unknown_origin(trained, corpus, capsys):
    code, _ = predict(capsys, trained, corpus, "--origin", "99999")
    assert code == 2


def test_predict_wrong_model_kind(trained, corpus):
    code = cli.main(["predict", "--model", str(trained / "dur" / "model.json"), "--stations",
                     str(corpus / "stations.csv"), "--origin", "1", "--start", "2014-07-15 08:15"])
    assert code == 2


def test_predict_table_output(trained, corpus, capsys):
    code = cli.main(["predict", "--model", str(trained / "dest" / "model.json"), "--stations",
                     str(corpus / "stations.csv"), "--origin", "1", "--start", "2014-07-15 08:15",
                     "--user-type", "customer", "--k", "2"])
    assert code == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 2
