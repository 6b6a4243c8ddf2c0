import csv
import io
import json

import pytest
import yaml

from nptopt.cli import main

TMSV = {"state": {"family": "tmsv", "params": [1.0]}, "noise": {"eta": 0.8},
        "budget": {"m_tot": 200}, "search": {"d_max": 3, "n_max": 2}, "output": {"name": "t"}}


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(TMSV))
    return str(path)


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_catalog(capsys):
    assert main(["catalog"]) == 0
    rows = _csv(capsys.readouterr().out)
    assert len(rows) == 20 and rows[0]["name"] == "D_I"


def test_enumerate_json(capsys):
    assert main(["enumerate", "--d-max", "5", "--n-max", "2", "--format", "json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 31


def test_filter(cfg, capsys):
    assert main(["filter", "--config", cfg]) == 0
    names = [r["criterion"] for r in _csv(capsys.readouterr().out)]
    assert names == ["D_I", "D_IV", "D_II", "D_VII"]


def test_evaluate(cfg, capsys):
    assert main(["evaluate", "--config", cfg]) == 0
    rows = _csv(capsys.readouterr().out)
    d1 = next(r for r in rows if r["criterion"] == "D_I")
    assert float(d1["gamma"]) == pytest.approx(0.883332891512167, abs=1e-10)


def test_rank(cfg, capsys):
    assert main(["rank", "--config", cfg]) == 0
    rows = _csv(capsys.readouterr().out)
    assert rows[0]["group"] == "D_I=D_IV" and rows[0]["verdict"] == "reject_H0"


def test_sweep_and_seed_override(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--seed", "5",
                 "--threads", "2", "--format", "json"]) == 0
    man = json.load(open(out / "t.manifest.json"))
    assert man["seed"] == 5
    assert json.load(open(out / "t.json"))[0]["rank"] == 1


def test_montecarlo(tmp_path, capsys):
    raw = dict(TMSV, search={"criteria": ["D_I"]}, montecarlo={"criterion": "D_I", "trials": 40})
    path = tmp_path / "mc.yaml"
    path.write_text(yaml.safe_dump(raw))
    assert main(["montecarlo", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "t.mc.0000.csv").exists()
    rows = _csv((tmp_path / "o" / "t.montecarlo.csv").read_text())
    assert 0.5 < float(rows[0]["std_ratio"]) < 1.5


def test_exit_code_config(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"state": {"family": "nope", "params": [1]}}))
    assert main(["rank", "--config", str(bad)]) == 2
    assert main(["rank"]) == 2
    assert main(["bogus"]) == 2
    assert main(["enumerate", "--d-min", "3", "--d-max", "2"]) == 2
    assert main(["catalog", "--threads", "0"]) == 2


def test_exit_code_numeric(tmp_path):
    raw = {"state": {"family": "tmsv", "params": [1.0], "dim": 3, "tail_tolerance": 1e-12}}
    path = tmp_path / "trunc.yaml"
    path.write_text(yaml.safe_dump(raw))
    assert main(["filter", "--config", str(path)]) == 3


def test_exit_code_io(tmp_path, cfg):
    assert main(["rank", "--config", str(tmp_path / "missing.yaml")]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["catalog", "--out", str(blocker / "sub")]) == 4
