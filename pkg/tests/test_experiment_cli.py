import csv
import json

import pytest

from dcbsim.cli import main
from dcbsim.experiment import ConfigError, ExperimentConfig, cells, run_experiment


def small_config(tmp_path, **kw):
    d = {"n_deployments": 2, "loads_bps": [25e6], "deltas_s": [0.0], "t_obs_s": 2.0, "out_dir": str(tmp_path / "out")}
    d.update(kw)
    return d


def test_default_grid_cell_count():
    # 200 deployments x 17 loads x (FP + 3 online schemes x 2 delays)
    assert len(cells(ExperimentConfig())) == 200 * 17 * 7


def test_config_rejects_unknown_and_invalid_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_dict({"n_deploy": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"schemes": ["XX"]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"phy": {"cca_dbm": 3.0}})
    with pytest.raises(ConfigError, match="traffic"):
        ExperimentConfig.from_dict({"traffic": {"foo": 1}})


def test_cli_run_writes_outputs(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(small_config(tmp_path)))
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg_path), "--out", str(out), "--decision-log", "--occupancy-log"]) == 0
    with open(out / "runs.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 8
    assert all(r["status"] == "ok" for r in rows)
    for r in rows:
        assert int(r["generated"]) == int(r["delivered"]) + int(r["dropped"]) + int(r["residual"])
    for name in ("aggregates.csv", "cdf.csv", "manifest.json", "decisions.csv", "occupancy.csv"):
        assert (out / name).exists()
    assert json.loads((out / "manifest.json").read_text())["failed"] == 0


def test_experiment_is_reproducible(tmp_path):
    cfg = ExperimentConfig.from_dict(small_config(tmp_path, schemes=["FP", "DW"]))
    assert run_experiment(cfg, tmp_path / "a") == 0
    assert run_experiment(cfg, tmp_path / "b") == 0
    for name in ("runs.csv", "aggregates.csv", "cdf.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{"n_deployments": 0}')
    assert main(["run", "--config", str(p)]) == 2
    assert "config error" in capsys.readouterr().err
    p.write_text("{not json")
    assert main(["run", "--config", str(p)]) == 2


def test_cli_scenario_gen_and_validate(tmp_path, capsys):
    p = tmp_path / "s.json"
    assert main(["scenario", "gen", str(p), "--seed", "4", "--load", "5e7"]) == 0
    assert main(["scenario", "validate", str(p)]) == 0
    assert "ok: 10 WLANs" in capsys.readouterr().out
    p.write_text('{"wlans": [{"id": 0}]}')
    assert main(["scenario", "validate", str(p)]) == 2


def test_cli_describe_defaults(capsys):
    assert main(["describe-defaults"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["phy"]["cca_dbm"] == -82.0 and d["eta"] == 0.9 and d["mac"]["cw_min"] == 16
