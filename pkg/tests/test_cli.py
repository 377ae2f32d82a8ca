import json
import subprocess
import sys
from pathlib import Path

import pytest

from apamoeba import cli
from apamoeba.relations import Verdict

SUMS = Path(__file__).resolve().parent.parent / "sample_sums"


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_eval_stdout(capsys):
    assert run("eval", SUMS / "exp_minus_two.json", "--x", 0, "--y", 0) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] == [-1.0, 0.0]


def test_jessen_csv(tmp_path):
    assert run("jessen", SUMS / "exp_minus_two.json", "--y=-2", "--y", "1", "--out", tmp_path) == 0
    lines = (tmp_path / "jessen.csv").read_text().splitlines()
    assert lines[0] == "y_1,J,stderr,s,clipped_fraction,stabilized"
    assert float(lines[1].split(",")[1]) == pytest.approx(2.0, abs=1e-2)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"jessen.csv"}
    assert manifest["seed"] == 0


def test_amoeba_outputs(tmp_path):
    assert run("amoeba", SUMS / "line.json", "--box=-3:3", "--res", 31, "--out", tmp_path) == 0
    pgm = (tmp_path / "amoeba.pgm").read_bytes()
    assert pgm.startswith(b"P5\n31 31\n255\n")
    assert set(pgm[len(b"P5\n31 31\n255\n"):]) <= {0, 128, 255}
    rows = (tmp_path / "cells.csv").read_text().splitlines()
    assert len(rows) == 31 * 31 + 1
    report = json.loads((tmp_path / "components.json").read_text())
    assert len(report["components"]) == 3
    assert not list(tmp_path.glob("*.partial"))


def test_amoeba_one_variable_has_no_pgm(tmp_path):
    assert run("amoeba", SUMS / "exp_minus_two.json", "--box=-3:3", "--res", 61, "--no-orders", "--out", tmp_path) == 0
    assert not (tmp_path / "amoeba.pgm").exists()
    assert (tmp_path / "cells.csv").exists()


def test_verify_exit_codes(tmp_path, monkeypatch):
    assert run("verify", SUMS / "exp_minus_two.json", "--box=-3:3", "--res", 121, "--out", tmp_path / "ok") == 0
    verdict = json.loads((tmp_path / "ok" / "verdict.json").read_text())
    assert verdict["assertion_i"]["status"] == "Verified"

    failed = {"status": "Failed"}
    monkeypatch.setattr(
        cli, "verify_theorem", lambda *a, **k: Verdict(failed, failed, failed, [], [], {}, [])
    )
    assert run("verify", SUMS / "exp_minus_two.json", "--out", tmp_path / "bad") == 1


def test_partial_outputs_kept_on_failure(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise ValueError("stage exploded")

    monkeypatch.setattr(cli, "components", boom)
    assert run("amoeba", SUMS / "line.json", "--res", 11, "--out", tmp_path) == 1
    assert (tmp_path / "cells.csv.partial").exists()
    assert not (tmp_path / "cells.csv").exists()
    assert not (tmp_path / "manifest.json").exists()


def test_kronecker(tmp_path, capsys):
    assert run("kronecker", "--mu", 1, "--a", 3.141592653589793, "--eps", 0.01, "--out", tmp_path) == 0
    assert capsys.readouterr().out.startswith("t=3.14159")
    doc = json.loads((tmp_path / "kronecker.json").read_text())
    assert doc["status"] == "Solved" and doc["m"] == [0]


def test_mean_motion(capsys):
    assert run("mean-motion", SUMS / "sqrt2.json", "--y=-3") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["gradient"][0] == pytest.approx(2 ** 0.5, abs=1e-2)
    assert doc["argument"][0] == pytest.approx(2 ** 0.5, abs=1e-2)


def test_components_command(tmp_path):
    assert run("components", SUMS / "sqrt2.json", "--box=-4:3", "--res", 141, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "components.json").read_text())
    assert doc["basis"] == [["1"], ["sqrt2"]]
    assert all(c["status"] == "Verified" for c in doc["components"])


def test_usage_errors(tmp_path, capsys):
    assert run("eval", SUMS / "line.json", "--x", 0, "--y", 0) == 2
    assert run("eval", tmp_path / "missing.json", "--x", 0, "--y", 0) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"dimension": 1, "terms": [{"coefficient": 1, "frequency": ["1"], "oops": 0}]}')
    assert run("eval", bad, "--x", 0, "--y", 0) == 2
    assert "oops" in capsys.readouterr().err


def test_manifest_is_repeatable(tmp_path):
    for d in ("a", "b"):
        run("jessen", SUMS / "exp_minus_two.json", "--y", "0.3", "--out", tmp_path / d, "--seed", 7)
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "apamoeba", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for sub in ("eval", "jessen", "amoeba", "components", "mean-motion", "verify", "kronecker"):
        assert sub in out.stdout
