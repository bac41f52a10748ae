import json

import numpy as np
import pytest

from ddelastic.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, data_path, main
from ddelastic.dataset import load_csv
from ddelastic.records import TIMING_KEYS, read_json, read_table


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


@pytest.mark.parametrize("kind", ["linear", "sigmoid", "unsymmetric", "noisy"])
def test_generate_each_kind(tmp_path, kind):
    extra = ["--sigma", "0.05"] if kind == "noisy" else []
    args = ["generate", kind, "--n", "21", "--strain-max", "0.1", "--E", "1e9", "--smax", "1e8",
            "--fraction", "0.7", "--seed", "3", "--out", str(tmp_path)] + extra
    assert main(args) == EXIT_OK
    d = load_csv(tmp_path / "dataset.csv")
    assert len(d) == 21


def test_solve_is_deterministic_modulo_timing(tmp_path):
    cfg = str(data_path("simplified_truss.json"))
    for sub in ("a", "b"):
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / sub)]) == EXIT_OK
    for kind in ("adm", "go_adm"):
        a = read_json(tmp_path / "a" / f"run_record_{kind}.json")
        b = read_json(tmp_path / "b" / f"run_record_{kind}.json")
        assert _strip_timing(a) == _strip_timing(b)
    go = read_json(tmp_path / "a" / "run_record_go_adm.json")
    adm = read_json(tmp_path / "a" / "run_record_adm.json")
    assert go["steps"][-1]["objective"] <= adm["steps"][-1]["objective"]
    assert (tmp_path / "a" / "go_adm_deformed.csv").exists()


def test_solve_bar_linear_override(tmp_path):
    rc = main(["solve", "--config", str(data_path("bar_benchmark.json")), "--alpha", "0", "--steps", "1",
               "--solver", "go-adm", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    rec = read_json(tmp_path / "run_record_go_adm.json")
    assert rec["config"]["alpha"] == 0 and len(rec["steps"]) == 1


def test_converge_small_grid(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(dict(n_elements=[4, 8], n_points=[9, 17])))
    assert main(["converge", "--config", str(cfg), "--alpha", "0", "--out", str(tmp_path)]) == EXIT_OK
    t = read_table(tmp_path / "convergence_alpha0_adm.csv")
    assert len(t["error"]) == 4
    summary = read_json(tmp_path / "convergence_alpha0_adm.json")
    assert set(summary["column_variation"]) == {"9", "17"}


def test_rope_defaults(tmp_path):
    assert main(["rope", "--steps", "10", "--out", str(tmp_path)]) == EXIT_OK
    s = read_json(tmp_path / "rope_summary.json")
    assert s["ok"] and s["loop_area"] > 0
    assert [p["warm_started"] for p in s["phases"]] == [False, True, True]
    t = read_table(tmp_path / "load_deflection.csv")
    assert set(np.unique(t["phase"])) == {0, 1, 2}


def test_rope_inconsistent_data_needs_force(tmp_path):
    csv = tmp_path / "bad.csv"
    csv.write_text("time,force,strain\n0,1e5,0.002\n1,2e5,0.001\n2,3e5,0.003\n")
    cfg = tmp_path / "rope.json"
    cfg.write_text(json.dumps(dict(csv=str(csv), ranges=[[0, 3]], n_elements=2)))
    assert main(["rope", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["rope", "--config", str(cfg), "--force", "--out", str(tmp_path)]) in (EXIT_OK, EXIT_SOLVER)


def test_oracle_command(tmp_path):
    assert main(["oracle", "--config", str(data_path("simplified_truss_oracle.json")),
                 "--out", str(tmp_path)]) == EXIT_OK
    r = read_json(tmp_path / "oracle_comparison.json")
    assert r["dominance"]
    o = r["objectives"]
    assert o["oracle"] <= o["go_adm"] * (1 + 1e-9) <= o["adm"] * (1 + 1e-9) ** 2


def test_oracle_budget_exit_code(tmp_path):
    cfg = json.loads(data_path("simplified_truss_oracle.json").read_text())
    cfg["budget"] = 10
    p = tmp_path / "o.json"
    p.write_text(json.dumps(cfg))
    assert main(["oracle", "--config", str(p), "--out", str(tmp_path)]) == EXIT_BUDGET


def test_solver_failure_exit_code(tmp_path):
    cfg = json.loads(data_path("bar_benchmark.json").read_text())
    cfg.setdefault("solver", {})["newton_max_iters"] = 1
    p = tmp_path / "s.json"
    p.write_text(json.dumps(cfg))
    assert main(["solve", "--config", str(p), "--out", str(tmp_path)]) == EXIT_SOLVER


@pytest.mark.parametrize("body", ["{not json", json.dumps(dict(structure=dict(kind="dome")))])
def test_config_errors(tmp_path, body):
    p = tmp_path / "bad.json"
    p.write_text(body)
    assert main(["solve", "--config", str(p), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG
