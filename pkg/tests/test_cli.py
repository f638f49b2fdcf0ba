import csv
import json
import os

import pytest
from click.testing import CliRunner

from stableexit.cli import main, make_preset


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def write_config(path, config):
    with open(path, "w") as fh:
        json.dump(config, fh)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


SMALL_EXIT_TIME = {
    "name": "et",
    "kind": "exit-time",
    "problem": {"domain": {"variant": "interval", "a": -1.0, "b": 1.0},
                "alpha": 1.0},
    "params": {"x_grid": [0.0]},
    "n_paths": 1000,
    "seed": 7,
}


def test_empty_config_names_missing_kind(tmp_path):
    cfg = write_config(tmp_path / "empty.json", {})
    res = run(["exit-time", cfg])
    assert res.exit_code == 2
    assert "kind" in res.output


def test_invalid_json_is_config_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    res = run(["exit-time", str(p)])
    assert res.exit_code == 2


def test_kind_mismatch_rejected(tmp_path):
    cfg = write_config(tmp_path / "c.json", SMALL_EXIT_TIME)
    res = run(["ratio", cfg])
    assert res.exit_code == 2
    assert "kind" in res.output


def test_schema_error_reports_field_path(tmp_path):
    bad = dict(SMALL_EXIT_TIME, n_paths=10)  # below the schema minimum
    cfg = write_config(tmp_path / "c.json", bad)
    res = run(["exit-time", cfg])
    assert res.exit_code == 2
    assert "n_paths" in res.output


def test_exit_time_run_writes_csv_and_manifest(tmp_path):
    cfg = write_config(tmp_path / "c.json", SMALL_EXIT_TIME)
    out = tmp_path / "out"
    res = run(["exit-time", cfg, "--out", str(out)])
    assert res.exit_code == 0, res.output
    rows = read_csv(out / "et.csv")
    assert list(rows[0]) == ["x", "order", "mean", "stderr", "censored_frac"]
    assert abs(float(rows[0]["mean"]) - 1.0) < 0.15  # unit exit-time oracle
    manifest = json.loads((out / "et_manifest.json").read_text())
    assert manifest["kind"] == "exit-time"
    assert manifest["seed"] == 7
    assert set(manifest["versions"]) == {"python", "numpy", "scipy", "stableexit"}
    assert manifest["artifacts"] == ["et.csv"]


def test_flag_overrides_and_idempotence(tmp_path):
    cfg = write_config(tmp_path / "c.json", SMALL_EXIT_TIME)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["exit-time", cfg, "--out", str(out1),
                "--seed", "9", "--n-paths", "1000", "--threads", "1"]).exit_code == 0
    assert run(["exit-time", cfg, "--out", str(out2),
                "--seed", "9", "--n-paths", "1000", "--threads", "4"]).exit_code == 0
    assert (out1 / "et.csv").read_bytes() == (out2 / "et.csv").read_bytes()
    m1 = json.loads((out1 / "et_manifest.json").read_text())
    m2 = json.loads((out2 / "et_manifest.json").read_text())
    assert m1["seed"] == m2["seed"] == 9


def test_barrier_preset_es34(tmp_path):
    res = run(["preset", "es34", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "es34.csv")
    assert len(rows) == 9  # 3 alphas x 3 exponents x 1 distance
    assert list(rows[0]) == ["alpha", "theta", "distance", "value", "err_bound"]
    # sign pattern: negative, ~0, positive within each alpha block
    for i in range(0, 9, 3):
        vals = [float(rows[i + j]["value"]) for j in range(3)]
        assert vals[0] < 0 and abs(vals[1]) < 1e-6 and vals[2] > 0
    assert (tmp_path / "es34_config.json").exists()


def test_prop81_preset_records_checks(tmp_path):
    res = run(["preset", "prop81", "--out", str(tmp_path), "--n-paths", "2000"])
    assert res.exit_code == 0, res.output
    manifest = json.loads((tmp_path / "prop81_manifest.json").read_text())
    checks = manifest["criteria"]["prop81"]
    assert checks["passed"] is True
    rows = read_csv(tmp_path / "prop81.csv")
    assert list(rows[0]) == ["x", "eps", "component", "fraction"]
    assert len(rows) == 6  # 3 eps x 2 endpoints


def test_solve_fd_surface_preset(tmp_path):
    res = run(["preset", "figure4", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "figure4.csv")
    assert len(rows) == 2500  # 50 x 50 surface
    assert list(rows[0]) == ["t", "x", "value", "stderr"]
    assert all(r["stderr"] == "0" for r in rows[:5])
    assert all(abs(float(r["value"])) <= 1.0 + 1e-9 for r in rows)


def test_solve_mc_small(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "name": "mc", "kind": "solve-mc",
        "problem": {"domain": {"variant": "interval", "a": 0.0, "b": 1.0},
                    "drift": {"preset": "example13"}, "alpha": 0.5,
                    "phi": {"kind": "constant", "params": [1.0]}},
        "params": {"t_grid": [0.25], "x_grid": [0.5]},
        "n_paths": 1000, "seed": 2,
    })
    res = run(["solve-mc", cfg, "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    rows = read_csv(tmp_path / "mc.csv")
    assert len(rows) == 1
    assert 0.0 <= float(rows[0]["value"]) <= 1.0


def test_decay_manifest_extras(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "name": "dec", "kind": "decay",
        "problem": {"domain": {"variant": "interval", "a": 0.0, "b": 1.0},
                    "drift": {"preset": "minusx"}, "alpha": 0.5,
                    "phi": {"kind": "constant", "params": [1.0]}},
        "params": {"t": 1.0, "x_grid": [0.05, 0.02]},
        "n_paths": 500, "seed": 3,
    })
    res = run(["decay", cfg, "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    manifest = json.loads((tmp_path / "dec_manifest.json").read_text())
    assert "loglog_slope" in manifest and manifest["theta"] == 0.5


def test_unknown_preset(tmp_path):
    res = run(["preset", "nope", "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_all_presets_validate():
    from stableexit.cli import _validate
    for name in ("figure1", "figure3", "figure4", "figure5", "prop81", "es34"):
        cfg = make_preset(name)
        cfg.setdefault("seed", 0)
        cfg.setdefault("threads", 1)
        cfg.setdefault("n_paths", 10_000)
        _validate(cfg)


def test_runtime_failure_recorded_in_manifest(tmp_path):
    # half-space domains have no default censoring horizon: runtime error
    cfg = write_config(tmp_path / "c.json", {
        "name": "bad", "kind": "exit-time",
        "problem": {"domain": {"variant": "halfspace", "normal": [1.0]},
                    "alpha": 0.5},
        "params": {"x_grid": [1.0]},
        "n_paths": 1000, "seed": 0,
    })
    res = run(["exit-time", cfg, "--out", str(tmp_path)])
    assert res.exit_code == 1
    manifest = json.loads((tmp_path / "bad_manifest.json").read_text())
    assert "error" in manifest


def test_verify_subcommand_fast_subset(tmp_path):
    res = run(["verify", "--out", str(tmp_path), "--scale", "0.02",
               "--criteria", "1", "--criteria", "8"])
    assert res.exit_code == 0, res.output
    assert "[PASS] criterion 1" in res.output
    assert "[PASS] criterion 8" in res.output
    manifest = json.loads((tmp_path / "acceptance_manifest.json").read_text())
    assert manifest["criteria"]["1"]["passed"] is True
