import json
import math

import numpy as np
import pytest

from landscape_probe.cli import main
from landscape_probe.harness import (EXPERIMENTS, SCHEMA, ExperimentConfig, canonical, fit_rate,
                                     git_hash, monotonicity_violations, parse_sweep, rows_to_csv, run)
from landscape_probe.model import Architecture

GRID = [2 ** k for k in range(7, 14)]


# ---- rate fits ----------------------------------------------------------------------

def test_fit_rate_exact_power_law():
    fit = fit_rate([(n, 3.0 / math.sqrt(n)) for n in GRID])
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-9)
    assert fit.r2 == pytest.approx(1.0)


def test_fit_rate_with_log_correction():
    fit = fit_rate([(n, 0.7 * math.sqrt(math.log(2 * n) / n)) for n in GRID])
    # d ln g / d ln n = -1/2 + 1/(2 ln 2n), between 1/(2 ln 256) and 1/(2 ln 16384) above -1/2
    assert -0.5 < fit.slope < -0.4
    assert fit.slope == pytest.approx(-0.5 + 0.5 / np.mean([math.log(2 * n) for n in GRID]), abs=5e-3)


def test_fit_rate_constant_and_excluded_points():
    assert fit_rate([(n, 0.25) for n in GRID]).slope == 0.0
    fit = fit_rate([(n, 1 / n) for n in GRID[:5]] + [(GRID[5], 0.0), (GRID[6], -1.0)])
    assert fit.slope == pytest.approx(-1.0)
    assert fit.excluded == [(float(GRID[5]), 0.0), (float(GRID[6]), -1.0)]
    with pytest.raises(ValueError):
        fit_rate([(n, 1.0) for n in GRID[:3]])


# ---- config --------------------------------------------------------------------------

def test_config_defaults_and_overrides():
    cfg = ExperimentConfig.for_experiment("gap-rate", trials=5, thresholds={"slope_min": -0.9})
    assert cfg.trials == 5
    assert cfg.thresholds == {"slope_min": -0.9, "slope_max": -0.35}
    assert cfg.n_grid == GRID
    with pytest.raises(ValueError):
        ExperimentConfig.for_experiment("gap-rate", colour="red")


@pytest.mark.parametrize("bad", [dict(n_grid=[]), dict(n_grid=[0, 4]), dict(trials=0),
                                 dict(arch="3"), dict(inputs="uniform"), dict(quantity="hessian")])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig.for_experiment("gap-rate", **bad).validate()


def test_unknown_experiment():
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="fly").validate()


def test_config_file_merges(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"experiment": "tail", "trials": 7, "params": {"t": 0.5}}))
    cfg = ExperimentConfig.from_file(p, seed=3)
    assert (cfg.experiment, cfg.trials, cfg.seed) == ("tail", 7, 3)
    assert cfg.params == {"t": 0.5, "allowed_inversions": 1}


def test_parse_sweep():
    assert parse_sweep("n=64..1024:geometric") == [64, 128, 256, 512, 1024]
    assert parse_sweep("n=10..30:linear:10") == [10, 20, 30]
    for bad in ("r=1..2", "n=5..1", "n=1..4:spiral"):
        with pytest.raises(ValueError):
            parse_sweep(bad)


def test_monotonicity_grid_is_clean():
    assert monotonicity_violations(Architecture((2, 3, 1)), [1.0, 2.0, 4.0], [2, 3],
                                   [8, 64, 512, 4096, 32768]) == []


# ---- documents --------------------------------------------------------------------------

def small(name, **kw):
    return ExperimentConfig.for_experiment(name, **kw)


def test_document_shape_and_determinism():
    cfg = small("gap-rate", trials=3, probes=16, n_grid=[64, 128, 256, 512])
    a, b = run(cfg), run(cfg)
    assert a["schema"] == SCHEMA and a["config"]["trials"] == 3
    assert a["input_hash"] == git_hash(canonical(a["config"]))
    assert a["runtime_s"] >= 0
    assert a["result_hash"] == b["result_hash"]
    assert a["result_hash"] != run(small("gap-rate", trials=3, probes=16, n_grid=[64, 128, 256, 512],
                                         seed=8))["result_hash"]


def test_git_hash_matches_blob_format():
    # `git hash-object` of the empty blob
    assert git_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"


def test_canonical_handles_numpy_and_nonfinite():
    text = canonical({"b": np.float64(1.5), "a": [np.int64(2), np.bool_(True)], "c": math.inf})
    assert text == '{"a":[2,true],"b":1.5,"c":"inf"}'


def test_rows_to_csv():
    text = rows_to_csv([{"n": 1, "g": 0.5}, {"n": 2, "g": 0.25, "extra": [1, 2]}])
    assert text.splitlines() == ["n,g,extra", "1,0.5,", '2,0.25,"[1, 2]"']
    assert rows_to_csv([]) == ""


@pytest.mark.parametrize("name,kw", [
    ("grad-check", dict(trials=5)),
    ("hess-check", dict(trials=3)),
    ("bounds", dict(params={"mono_n": [8, 64, 512, 4096]})),
    ("tail", dict(trials=50)),
    ("net-norms", dict(trials=10)),
    ("degenerate-audit", dict(trials=5)),
    ("norm-audit", dict(params={"draws": 200, "calibration_draws": 5000})),
])
def test_small_runs_pass(name, kw):
    doc = run(small(name, **kw))
    assert doc["pass"], doc["assertions"]


def test_every_experiment_has_defaults():
    assert set(EXPERIMENTS) == {"grad-check", "hess-check", "bounds", "gap-rate", "stationary-pair",
                                "loo-stability", "norm-audit", "tail", "net-norms", "degenerate-audit"}
    for name in EXPERIMENTS:
        small(name).validate()


# ---- CLI ----------------------------------------------------------------------------------

def test_cli_writes_json_and_csv(tmp_path, capsys):
    out, csv = tmp_path / "r" / "run.json", tmp_path / "r" / "run.csv"
    code = main(["tail", "--trials", "20", "--seed", "7", "--out", str(out), "--csv", str(csv)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "lp-1" and doc["pass"] and doc["config"]["trials"] == 20
    assert csv.read_text().splitlines()[0].startswith("n,exceedance")
    assert "tail: PASS" in capsys.readouterr().out


def test_cli_failing_assertion_exits_one(tmp_path):
    out = tmp_path / "run.json"
    code = main(["gap-rate", "--trials", "3", "--probes", "8", "--n-grid", "64,128,256,512",
                 "--set", "thresholds.slope_max=-5", "--set", "thresholds.slope_min=-6",
                 "--out", str(out)])
    assert code == 1
    assert json.loads(out.read_text())["pass"] is False


def test_cli_empty_grid_writes_nothing(tmp_path, capsys):
    out = tmp_path / "run.json"
    assert main(["gap-rate", "--n-grid", "", "--out", str(out)]) == 2
    assert not out.exists()
    assert "n grid is empty" in capsys.readouterr().err


def test_cli_activation_flag_and_config_file(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"experiment": "grad-check", "trials": 2}))
    out = tmp_path / "run.json"
    assert main(["grad-check", "--config", str(cfgp), "--set", 'params.activations=["sigmoid"]',
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["cases"] == 2
    assert all(r["case_id"].startswith("sigmoid") for r in doc["rows"])


def test_cli_bounds_sweep_csv(tmp_path):
    csv = tmp_path / "sweep.csv"
    assert main(["bounds", "--arch", "2,3,1", "--activation", "sigmoid",
                 "--sweep", "n=64..1024:geometric", "--set", "params.mono_n=[8,64,512]", "--csv", str(csv)]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0].split(",")[0] == "n" and len(lines) == 6


def test_cli_rejects_bad_set():
    with pytest.raises(SystemExit):
        main(["tail", "--set", "colour=1"])
