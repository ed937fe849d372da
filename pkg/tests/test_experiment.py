import csv
import io
import json

import numpy as np
import pytest

from superres.experiment import (DELTA_COLUMNS, Scenario, dumps, emit_report,
                                 random_separated_measure, rows_to_csv,
                                 run_noiseless_experiment, run_noisy_experiment)
from superres.measure import is_separated

GRID = np.linspace(0, 1, 64)

BASE = {
    "name": "two-atoms",
    "seed": 3,
    "psf": {"d": 2, "M": 6, "kernel": {"type": "gaussian", "sigma": 0.1}, "grid": "uniform"},
    "measure": {"dim": 2, "atoms": [{"loc": [GRID[19], GRID[44]], "amp": 1.0},
                                    {"loc": [GRID[44], GRID[19]], "amp": 0.8}]},
    "eps": 0.1,
    "deltas": [0.0, 0.01],
    "eps_sweep": [0.1, 0.45],
    "grid_res": 64,
    "certificate": {"verify_n": 256},
}


@pytest.fixture(scope="module")
def noisy_report():
    return run_noisy_experiment(Scenario(BASE))


def test_random_measure_is_separated_and_on_grid():
    m = random_separated_measure(2, 3, 0.1, seed=5, grid=GRID)
    assert m.K == 3 and is_separated(m, 0.1)
    assert np.all(np.isin(m.locations, GRID))
    again = random_separated_measure(2, 3, 0.1, seed=5, grid=GRID)
    assert np.array_equal(m.locations, again.locations)
    with pytest.raises(RuntimeError):
        random_separated_measure(1, 3, 0.3, seed=0, on_grid=False)


def test_scenario_validation():
    with pytest.raises(ValueError, match="policy"):
        Scenario(dict(BASE, delta_prime_policy="loose"))
    s = Scenario(dict(BASE, measure={"random": {"K": 2, "eps": 0.1}}))
    assert s.measure.K == 2 and s.K == 2


def test_noiseless_section_exact():
    rep = run_noiseless_experiment(Scenario(dict(BASE, psf=dict(BASE["psf"], M=5))))
    assert rep["exact_support"] and rep["misfit"] <= 1e-9
    assert rep["max_amplitude_rel_error"] <= 1e-6
    assert rep["certificate"]["verification"]["pass"]
    assert rep["hypothesis_violations"] == []


def test_noiseless_flags_too_few_samples():
    rep = run_noiseless_experiment(Scenario(dict(BASE, psf=dict(BASE["psf"], M=4))))
    assert rep["hypothesis_violations"] and "certificate" not in rep


def test_noisy_flags_too_few_samples():
    rep = run_noisy_experiment(Scenario(dict(BASE, psf=dict(BASE["psf"], M=5))))
    assert rep["hypothesis_violations"] and rep["delta_sweep"] == []


def test_noisy_rows(noisy_report):
    rows = noisy_report["delta_sweep"]
    assert [r["delta"] for r in rows] == [0.0, 0.01]
    for r in rows:
        assert r["satisfied"] and r["away_mass_ok"] and r["near_mass_ok"]
        assert r["realized_dgw"] <= r["bound_value"]
    # zero noise, zero residual: the solver reproduces the data exactly
    assert rows[0]["realized_dgw"] <= 1e-6


def test_eps_sweep_records_failures(noisy_report):
    ok, bad = noisy_report["eps_sweep"]
    assert ok["status"] == "ok" and ok["g_bar"] == 1.0
    assert bad["status"] == "failed" and bad["error"]


def test_report_json_deterministic(tmp_path, noisy_report):
    emit_report({"noisy": noisy_report}, tmp_path / "a", "json", {"seed": 3})
    emit_report({"noisy": noisy_report}, tmp_path / "b", "json", {"seed": 3})
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    back = json.loads(a)
    assert back["sections"]["noisy"]["delta_sweep"][1]["delta"] == 0.01
    assert dumps(back["sections"]) == dumps({"noisy": noisy_report})


def test_csv_output(tmp_path, noisy_report):
    paths = emit_report({"noisy": noisy_report}, tmp_path, "csv")
    assert sorted(p.rsplit("/", 1)[1] for p in paths) == ["delta_sweep.csv", "eps_sweep.csv"]
    rows = list(csv.DictReader(io.StringIO((tmp_path / "delta_sweep.csv").read_text())))
    assert len(rows) == 2 and list(rows[0]) == DELTA_COLUMNS
    assert float(rows[1]["delta"]) == 0.01


def test_empty_results_give_header_only_csv(tmp_path):
    assert rows_to_csv([], ["a", "b"]) == "a,b\n"
    emit_report({}, tmp_path, "csv")
    assert (tmp_path / "delta_sweep.csv").read_text() == ",".join(DELTA_COLUMNS) + "\n"
    with pytest.raises(ValueError):
        emit_report({}, tmp_path, "xml")


def test_csv_floats_roundtrip():
    text = rows_to_csv([{"x": 0.1 + 0.2, "y": True}], ["x", "y"])
    row = next(csv.DictReader(io.StringIO(text)))
    assert float(row["x"]) == 0.1 + 0.2 and row["y"] == "True"
