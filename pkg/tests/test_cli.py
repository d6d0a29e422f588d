import csv
import json
import math
import os
import subprocess
import sys

import pytest

from morseforge import cli


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(out[-1]) if out else None


def test_shoot_hsiang_example(capsys, tmp_path):
    out = tmp_path / "e1"
    code, info = run(capsys, "shoot-hsiang", "--i", 1, "--tol", 1e-10, "--out", out)
    assert code == 0 and info["crossings"] == 3
    assert (out / "curve.csv").exists()
    assert json.loads((out / "profile.json").read_text())["crossings"] == 3


def test_fredholm_example(capsys, tmp_path):
    code, info = run(capsys, "fredholm", "--beta", 1.5, "--c", 2, "--out", tmp_path)
    assert code == 0 and info["fredholmIndex"] == -18 and info["crossingSum"] == 36
    assert json.loads((tmp_path / "fredholm.json").read_text())["fredholmIndex"] == -18


def test_non_fredholm_weight_is_a_domain_error(capsys, tmp_path):
    code, info = run(capsys, "fredholm", "--beta", 1.0, "--c", 2, "--out", tmp_path)
    assert code == 2 and info["error"] == "NonFredholmWeight"


def test_equator_volume_and_reingest(capsys, tmp_path):
    code, _ = run(capsys, "shoot-hsiang", "--i", 0, "--out", tmp_path / "equator")
    assert code == 0
    path = tmp_path / "equator" / "curve.csv"
    code, q1 = run(capsys, "quantities", "--curve", path, "--out", tmp_path / "q1")
    assert code == 0 and abs(q1["volume"] - 2 * math.pi ** 2) < 1e-6
    code, q2 = run(capsys, "quantities", "--curve", path, "--out", tmp_path / "q2")
    assert (tmp_path / "q1" / "quantities.json").read_bytes() == \
        (tmp_path / "q2" / "quantities.json").read_bytes()


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# indicial run\nbeta = 2.5\nc = 2  # constant\n")
    code, info = run(capsys, "fredholm", "--config", cfg, "--out", tmp_path)
    assert code == 0 and info["beta"] == 2.5 and info["fredholmIndex"] == -42
    code, info = run(capsys, "fredholm", "--config", cfg, "--beta", 1.5, "--out", tmp_path)
    assert info["beta"] == 1.5 and info["fredholmIndex"] == -18


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("beta = 1.5\ngamma = 3\n")
    code, info = run(capsys, "fredholm", "--config", cfg, "--out", tmp_path)
    assert code == 2 and info["error"] == "ConfigError" and "gamma" in info["message"]


def test_out_of_range_parameter(capsys, tmp_path):
    code, info = run(capsys, "shoot-hsiang", "--i", 0, "--h", 0.5, "--out", tmp_path)
    assert code == 2 and info["error"] == "ConfigError"


def test_bad_flag_names_the_flag(capsys):
    with pytest.raises(SystemExit) as ex:
        cli.main(["fredholm", "--gamma", "2"])
    assert ex.value.code == 2
    assert "--gamma" in capsys.readouterr().err


def test_default_output_root(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("MORSEFORGE_OUT", str(tmp_path))
    code, _ = run(capsys, "indicial", "--beta", 1.5, "--b", 1.0, "--format", "csv")
    assert code == 0
    assert sorted(os.listdir(tmp_path / "indicial")) == ["indicial.csv", "indicial.json"]


def test_football_modes(capsys, tmp_path):
    code, info = run(capsys, "football-modes", "--eps", "1e-2,1e-3", "--out", tmp_path)
    counts = [r["neg"] for r in info["counts"]]
    assert code == 0 and counts[1] > counts[0]
    with open(tmp_path / "football_modes.csv") as fh:
        assert next(csv.reader(fh)) == ["eps", "neg"]


def test_acceptance_is_deterministic(capsys, tmp_path):
    for d in ("a", "b"):
        code, info = run(capsys, "all-acceptance", "--only", "8,12,13", "--out", tmp_path / d)
        assert code == 0 and info["passed"]
    a = (tmp_path / "a" / "acceptance.csv").read_bytes()
    assert a == (tmp_path / "b" / "acceptance.csv").read_bytes()
    assert a.splitlines()[0] == b"criterion,expected,observed,tolerance,pass"


def test_impossible_tolerance_fails(capsys, tmp_path):
    code, info = run(capsys, "all-acceptance", "--only", "2,3", "--tol", 0, "--out", tmp_path)
    assert code == 1 and not info["passed"]
    rows = list(csv.DictReader(open(tmp_path / "acceptance.csv")))
    assert rows and all(r["pass"] == "false" for r in rows)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "morseforge.cli", "indicial", "--beta", "1.5",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["beta"] == 1.5
