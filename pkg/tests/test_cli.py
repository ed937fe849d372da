import json
import subprocess
import sys

import numpy as np
import pytest

from superres.cli import main

GRID = np.linspace(0, 1, 32)


def _config(tmp_path, **over):
    cfg = {
        "name": "cli",
        "seed": 1,
        "psf": {"d": 2, "M": 5, "kernel": {"type": "gaussian", "sigma": 0.1}},
        "measure": {"dim": 2, "atoms": [{"loc": [GRID[9], GRID[22]], "amp": 1.0},
                                        {"loc": [GRID[22], GRID[9]], "amp": 0.5}]},
        "grid_res": 32,
        "certificate": {"verify_n": 256},
    }
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_simulate_then_solve(tmp_path):
    cfg = _config(tmp_path)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "sim")]) == 0
    for name in ("psf.json", "measure.json", "obs.json"):
        assert (tmp_path / "sim" / name).exists()
    out = tmp_path / "sol.json"
    code = main(["solve", "--psf", str(tmp_path / "sim" / "psf.json"),
                 "--obs", str(tmp_path / "sim" / "obs.json"), "--grid", "32",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["status"] == "feasible" and doc["achieved_misfit"] <= 1e-9
    np.testing.assert_allclose(sorted(a["amp"] for a in doc["atoms"]["atoms"]), [0.5, 1.0],
                               rtol=1e-6)


def test_certify_noiseless(tmp_path):
    out = tmp_path / "q.json"
    assert main(["certify", "--kind", "noiseless", "--config", _config(tmp_path),
                 "--verify-grid", "256", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["noiseless"]["verification"]["pass"]


def test_certify_hypothesis_exit_code(tmp_path, capsys):
    cfg = _config(tmp_path, psf={"d": 2, "M": 4, "kernel": {"type": "gaussian", "sigma": 0.1}})
    assert main(["certify", "--kind", "noiseless", "--config", cfg]) == 2
    assert "hypothesis violation" in capsys.readouterr().err


def test_certify_needs_inputs(capsys):
    assert main(["certify", "--kind", "away"]) == 1


def test_distance(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps({"dim": 1, "atoms": [{"loc": [0.2], "amp": 1.0}]}))
    b.write_text(json.dumps({"dim": 1, "atoms": [{"loc": [0.5], "amp": 1.0}]}))
    out = tmp_path / "d.json"
    assert main(["distance", "--a", str(a), "--b", str(b), "--mode", "w",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["value"] == pytest.approx(0.3)
    assert main(["distance", "--a", str(a), "--b", str(b), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["value"] == pytest.approx(0.3)


def test_missing_file_is_error(tmp_path, capsys):
    assert main(["distance", "--a", str(tmp_path / "nope"), "--b", "x"]) == 1
    assert "error" in capsys.readouterr().err


def test_experiment_exit_code_for_violation(tmp_path):
    cfg = _config(tmp_path, psf={"d": 2, "M": 4, "kernel": {"type": "gaussian", "sigma": 0.1}})
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--mode", "noiseless"]) == 2
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    assert doc["sections"]["noiseless"]["hypothesis_violations"]


def test_experiment_rerun_byte_identical(tmp_path):
    cfg = _config(tmp_path)
    for run in ("r1", "r2"):
        assert main(["experiment", "--config", cfg, "--out", str(tmp_path / run)]) == 0
        assert main(["experiment", "--config", cfg, "--out", str(tmp_path / run),
                     "--format", "csv"]) == 0
    for name in ("report.json", "noiseless.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_seed_override(tmp_path):
    cfg = _config(tmp_path, measure={"random": {"K": 2, "eps": 0.15}})
    main(["experiment", "--config", cfg, "--out", str(tmp_path / "s1"), "--seed", "1"])
    main(["experiment", "--config", cfg, "--out", str(tmp_path / "s2"), "--seed", "2"])
    one = json.loads((tmp_path / "s1" / "report.json").read_text())
    two = json.loads((tmp_path / "s2" / "report.json").read_text())
    assert one["provenance"]["seed"] == 1 and two["provenance"]["seed"] == 2
    assert one["provenance"]["measure"] != two["provenance"]["measure"]


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "superres.cli", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for sub in ("simulate", "solve", "certify", "distance", "experiment"):
        assert sub in out
