import csv
import json
import math

import pytest

from ndwave.cli import RunConfig, main
from ndwave.errors import ConfigError

SMALL_PROP = {"L": 40.0, "N": 64, "dt": 0.1, "steps": 20, "core_radius": 5.0, "snapshot_every": 5}


def write_config(tmp_path, d, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(d))
    return str(path)


def load(path):
    return json.loads(path.read_text())


def test_product_standard(tmp_path, capsys):
    code = main(["product", "--v1", "0,0,0.3", "--v2", "0,0,-0.3", "--space", "standard", "--out", str(tmp_path)])
    assert code == 0
    first = capsys.readouterr().out.splitlines()[0]
    assert json.loads(first)["value"][0] == pytest.approx(16.4493, rel=1e-2)
    rep = load(tmp_path / "product_standard.json")
    assert rep["config"]["out"] == str(tmp_path)
    assert rep["reports"][0]["pass"]


def test_product_equal_velocities_diverge(tmp_path, capsys):
    code = main(["product", "--v1", "0,0,0.3", "--v2", "0,0,0.3", "--out", str(tmp_path)])
    assert code == 1
    assert "DivergentProduct" in capsys.readouterr().err


def test_product_s_space(tmp_path):
    assert main(["product", "--v1", "0,0,0.3", "--v2", "0,0,-0.3", "--space", "S", "--out", str(tmp_path)]) == 0
    rep = load(tmp_path / "product_S.json")["reports"][0]
    assert rep["check_id"] == "s_offdiagonal_ratio" and rep["residual"] < 1e-3


def test_bad_vector_is_usage_error(tmp_path):
    assert main(["product", "--v1", "0,0", "--v2", "0,0,1", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("cfg", [{"propagation": {"N": 100}}, {"bogus": 1}, {"propagation": {"dx": 1.0}},
                                 {"grid": {"n_r": 100}}, {"seed": -1}])
def test_config_errors_exit_2(tmp_path, cfg, capsys):
    path = write_config(tmp_path, cfg)
    assert main(["--config", path, "verify", "--suite", "identities"]) == 2
    assert "config error" in capsys.readouterr().err


def test_flag_overrides_config(tmp_path):
    path = write_config(tmp_path, {"seed": 3, "out": str(tmp_path / "a")})
    assert main(["--config", path, "verify", "--suite", "boost", "--seed", "5"]) == 0
    rep = load(tmp_path / "a" / "verify_boost.json")
    assert rep["config"]["seed"] == 5


def test_global_flags_before_subcommand(tmp_path):
    assert main(["--out", str(tmp_path), "--tol-scale", "2", "verify", "--suite", "boost"]) == 0
    rep = load(tmp_path / "verify_boost.json")
    assert rep["config"]["tol_scale"] == 2.0
    assert rep["reports"][-1]["tolerance"] == pytest.approx(1.0)


def test_verify_identities_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--suite", "identities", "--out", str(a)]) == 0
    assert main(["verify", "--suite", "identities", "--out", str(a)]) == 0
    first = (a / "verify_identities.json").read_bytes()
    assert main(["verify", "--suite", "identities", "--out", str(b)]) == 0
    second = json.loads((b / "verify_identities.json").read_text())
    second["config"]["out"] = str(a)
    assert json.loads(first) == second
    assert main(["verify", "--suite", "identities", "--out", str(a)]) == 0
    assert (a / "verify_identities.json").read_bytes() == first


def test_propagate_small(tmp_path):
    path = write_config(tmp_path, {"propagation": SMALL_PROP})
    assert main(["--config", path, "propagate", "--out", str(tmp_path), "--export-final"]) == 0
    rows = list(csv.DictReader((tmp_path / "metrics.csv").open()))
    assert len(rows) == 5 and "shape_error" in rows[0]
    assert max(float(r["shape_error"]) for r in rows) < 1e-2
    assert (tmp_path / "final.c64").exists() and (tmp_path / "final.c64.json").exists()
    rep = load(tmp_path / "propagate.json")
    assert rep["config"]["propagation"]["N"] == 64


def test_propagate_core_exits_box(tmp_path, capsys):
    assert main(["propagate", "--steps", "2000", "--out", str(tmp_path)]) == 1
    assert "CoreExitedBox" in capsys.readouterr().err


def test_propagate_n_not_power_of_two(tmp_path):
    assert main(["propagate", "--N", "100", "--out", str(tmp_path)]) == 2


def test_eval_resting_packet(tmp_path):
    assert main(["eval", "--v", "0,0,0", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "eval.csv").open()))
    for row in rows[:: max(1, len(rows) // 50)]:
        r = float(row["r"])
        assert float(row["re"]) == pytest.approx(math.sin(r) / r, rel=1e-12, abs=1e-14)
        assert abs(float(row["im"])) < 1e-14


def test_spectrum(tmp_path):
    assert main(["spectrum", "--kind", "l0", "--n", "64", "--out", str(tmp_path)]) == 0
    rep = load(tmp_path / "spectrum_l0.json")
    assert rep["config"]["spectrum_n"] == 64


def test_runconfig_roundtrip():
    cfg = RunConfig()
    assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"params": {"m": -1.0}})
