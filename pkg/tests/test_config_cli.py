import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from realqm.cli import main
from realqm.config import ConfigError, RunConfig, load_config, load_expected, parse_config_text
from realqm.measures import rho_bar
from realqm.qmat import dump_state


def run_json(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip().startswith("{") else out


def test_defaults():
    cfg = RunConfig()
    assert cfg.seed == 0 and cfg.format == "json" and cfg.jobs == 1


@pytest.mark.parametrize("kw", [{"seed": -1}, {"seed": 2 ** 64}, {"format": "xml"}, {"tol": 0.0},
                                {"jobs": 0}])
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw)


@given(st.integers(0, 2 ** 64 - 1))
def test_any_64_bit_seed_is_accepted(seed):
    assert RunConfig(seed=seed).seed == seed


def test_parse_config_text():
    vals = parse_config_text("# comment\nseed = 0x10\ntol=1e-6  # inline\nformat = 'csv'\n\nmax-iters = 5\n")
    assert vals == {"seed": 16, "tol": 1e-6, "format": "csv", "max_iters": 5}
    with pytest.raises(ConfigError):
        parse_config_text("seed 3")
    with pytest.raises(ConfigError):
        parse_config_text("colour = red")
    with pytest.raises(ConfigError):
        parse_config_text("seed = many")


def test_load_config_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("seed = 4\njobs = 2\n")
    cfg = load_config(p, seed=9, jobs=None)
    assert cfg.seed == 9 and cfg.jobs == 2
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_load_expected_validates(tmp_path):
    exp = load_expected()
    assert exp["optimum"] == pytest.approx(6 * np.sqrt(2))
    bad = dict(exp)
    bad["optimum"] = "big"
    p = tmp_path / "e.json"
    p.write_text(json.dumps(bad))
    with pytest.raises(ConfigError):
        load_expected(p)
    del bad["optimum"]
    p.write_text(json.dumps(bad))
    with pytest.raises(ConfigError):
        load_expected(p)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_expected(p)


def test_cli_bell_local(capsys):
    code, out = run_json(capsys, "bell", "local", "--seed", "3")
    assert code == 0
    assert out["meta"]["command"] == "bell" and out["meta"]["seed"] == 3
    assert out["result"]["local_maximum"] == pytest.approx(6.0)


def test_cli_optimal_strategy_roundtrip(capsys, tmp_path):
    path = tmp_path / "s.json"
    code, out = run_json(capsys, "bell", "optimal", "--save-strategy", str(path))
    assert code == 0 and out["result"]["score"] == pytest.approx(6 * np.sqrt(2))
    code, out = run_json(capsys, "sim", "network", "--strategy", str(path))
    assert code == 0
    assert json.dumps(out["result"])  # serializable
    assert out["result"]["locality_ok"] is True


def test_cli_measures_on_state_file(capsys, tmp_path):
    path = tmp_path / "rho.json"
    dump_state(rho_bar(), path)
    code, out = run_json(capsys, "measures", "ef", "--state", str(path))
    assert code == 0 and out["result"]["value"] == pytest.approx(1.0)
    code, out = run_json(capsys, "measures", "dsep", "--state", str(path))
    assert code == 0 and out["result"]["value"] == pytest.approx(0.5, abs=1e-6)


def test_cli_missing_state_is_usage_error(capsys):
    assert main(["measures", "ef"]) == 2


def test_cli_table1_csv(capsys):
    assert main(["table1", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "score,eps2,eps2_percent"
    assert [ln.split(",")[-1] for ln in lines[1:]] == load_expected()["table1_eps2"]


def test_cli_output_file(capsys, tmp_path):
    out = tmp_path / "b.json"
    assert main(["bound", "--score", "8.09", "7.83", "-o", str(out)]) == 0
    data = json.loads(out.read_text())
    assert [r["eps_percent"] for r in data["result"]] == ["2.5", "1.0"]


def test_cli_bad_config_exits_2(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("format = yaml\n")
    assert main(["bell", "local", "--config", str(cfg)]) == 2
    assert "format" in capsys.readouterr().err


def test_cli_malformed_expected_exits_2(capsys, tmp_path):
    p = tmp_path / "e.json"
    p.write_text("{not json")
    assert main(["reproduce", "--only", "13", "--expected", str(p)]) == 2


def test_cli_reproduce_single_criterion(capsys):
    code, out = run_json(capsys, "reproduce", "--only", "13")
    assert code == 0
    assert out["result"]["failed"] == []
    assert {r["status"] for r in out["result"]["rows"]} == {"pass"}


def test_cli_reproduce_reports_failure(capsys, tmp_path):
    exp = load_expected()
    exp["experiment_bounds"] = [0.5, 0.5]
    p = tmp_path / "e.json"
    p.write_text(json.dumps(exp))
    assert main(["reproduce", "--only", "13", "--expected", str(p)]) == 1


def test_cli_hierarchy_build_and_export(capsys, tmp_path):
    path = tmp_path / "l1.dat-s"
    code, out = run_json(capsys, "hierarchy", "build", "--level", "1", "--eps", "0.1",
                         "--export", str(path))
    assert code == 0
    assert out["result"]["block_sizes"][:5] == [28] * 5
    assert path.exists()


def test_cli_unknown_command_exits_2(capsys):
    assert main(["frobnicate"]) == 2


@pytest.mark.parametrize("score,bound", [(8.09, 0.0253), (7.83, 0.0100), (7.60, 0.0)])
def test_cli_experiments_linear_bounds(capsys, score, bound):
    code, out = run_json(capsys, "experiments", "--score", str(score))
    assert code == 0
    row = out["result"][0]
    assert row["linear_bound"] == pytest.approx(bound, abs=5e-5)
    assert "hierarchy_lower" not in row


def test_cli_experiments_uses_saved_grid(capsys, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"eps": 0.0, "bound": 7.9}, {"eps": 0.1, "bound": 8.2}]))
    code, out = run_json(capsys, "experiments", "--score", "8.09", "7.83",
                         "--hierarchy-file", str(grid))
    assert code == 0
    assert [r["hierarchy_lower"] for r in out["result"]] == [0.0, 0.0]
    assert out["result"][0]["hierarchy_method"] != out["result"][0]["linear_bound_method"]


def test_cli_reproduce_by_module_name(capsys):
    code, out = run_json(capsys, "reproduce", "--only", "measures")
    assert code == 0
    assert {r["criterion"] for r in out["result"]["rows"]} == {"2", "3", "5", "9"}


def test_cli_hierarchy_solve_report_shape(capsys):
    code, out = run_json(capsys, "hierarchy", "solve", "--level", "1", "--eps", "0",
                         "--backend", "splitting", "--max-iters", "20")
    assert code == 0
    assert {"level", "eps", "bound", "backend", "residuals"} <= set(out["result"])
    assert out["result"]["backend"] == "splitting"


def test_cli_output_is_reproducible(capsys):
    argv = ["bell", "seesaw", "--field", "real", "--seeds", "2", "--iters", "20", "--seed", "7"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
