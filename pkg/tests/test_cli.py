import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from loewnerkit import builtins as B
from loewnerkit.cli import DEFAULT_PARAMS, main, resolve, run
from loewnerkit.schema import COMMANDS, SCHEMA

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def load_report(out):
    return json.loads((out / "report.json").read_text())


def write(tmp_path, scenario, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(scenario))
    return p


# --- scenarios shipped with the repo


@pytest.mark.parametrize("name,code", [
    ("malformed_field", 2), ("evolve_decay", 0),
    ("audit_piecewise", 0), ("trotter_tanh", 0), ("recover_decay", 0), ("product_euler_ball", 0),
    ("audit_distance_rotation", 0), ("flow_constant", 1),
])
def test_shipped_scenarios(tmp_path, name, code):
    assert run(SCENARIOS / f"{name}.json", tmp_path, quiet=True) == code
    rep = load_report(tmp_path)
    assert rep["exit_code"] == code


def test_malformed_names_the_offending_key(tmp_path):
    run(SCENARIOS / "malformed_field.json", tmp_path, quiet=True)
    rep = load_report(tmp_path)
    assert rep["status"] == "input-error"
    assert "coefficients" in rep["error"]


def test_report_echoes_resolved_scenario(tmp_path):
    sc = {"domain": {"kind": "disc"}, "command": "evolve", "herglotz": {"builtin": "decay_1pt"},
          "params": {"t": 1.0, "z": 0.5}}
    assert run(write(tmp_path, sc), tmp_path / "out", quiet=True) == 0
    rep = load_report(tmp_path / "out")
    echoed = rep["scenario"]
    assert echoed["params"]["s"] == DEFAULT_PARAMS["evolve"]["s"]
    assert "rel_tol" in echoed["tolerances"]
    assert echoed["seed"] == 0
    assert "wall_seconds" in rep["timing"]
    header = (tmp_path / "out" / "data.csv").read_text().splitlines()[0]
    assert header == "t,re_z_1,im_z_1"


def test_csv_multi_dim_header(tmp_path):
    sc = {"domain": {"kind": "ball", "dim": 2}, "command": "flow", "field": {"builtin": "contraction"},
          "params": {"z0": [0.5, [0, 0.3]], "t_end": 1.0, "samples": 3}}
    assert run(write(tmp_path, sc), tmp_path / "out", quiet=True) == 0
    lines = (tmp_path / "out" / "data.csv").read_text().splitlines()
    assert lines[0] == "t,re_z_1,im_z_1,re_z_2,im_z_2"
    assert len(lines) == 1 + 4
    assert "\r" not in (tmp_path / "out" / "data.csv").read_bytes().decode()


# --- exit codes


@pytest.mark.parametrize("scenario", [
    {"domain": {"kind": "disc"}},
    {"domain": {"kind": "disc"}, "command": "flow"},
    {"domain": {"kind": "disc"}, "command": "flow", "field": {"builtin": "nope"}, "params": {"z0": 0, "t_end": 1}},
    {"domain": {"kind": "disc"}, "command": "flow", "field": {"builtin": "tanh"}, "params": {"t_end": 1}},
    {"domain": {"kind": "annulus"}, "command": "check-generator", "field": {"builtin": "tanh"}},
    {"domain": {"kind": "disc"}, "command": "evolve", "params": {"t": 1, "z": 0}},
    {"domain": {"kind": "disc"}, "command": "check-generator", "field": {"builtin": "tanh"}, "seed": -1},
])
def test_schema_errors_exit_2(tmp_path, scenario):
    assert run(write(tmp_path, scenario), tmp_path / "out", quiet=True) == 2


def test_semantic_input_errors_exit_2(tmp_path):
    # point outside the domain and dimension mismatch pass the schema but not the builders
    outside = {"domain": {"kind": "disc"}, "command": "flow", "field": {"builtin": "tanh"},
               "params": {"z0": 1.5, "t_end": 1}}
    assert run(write(tmp_path, outside), tmp_path / "a", quiet=True) == 2
    bad_dim = {"domain": {"kind": "ball", "dim": 2}, "command": "flow", "field": {"linear": [[1]]},
               "params": {"z0": [0, 0], "t_end": 1}}
    assert run(write(tmp_path, bad_dim), tmp_path / "b", quiet=True) == 2
    assert run(tmp_path / "missing.json", tmp_path / "c", quiet=True) == 2
    (tmp_path / "broken.json").write_text("{not json")
    assert run(tmp_path / "broken.json", tmp_path / "d", quiet=True) == 2


def test_numerical_failure_exit_3(tmp_path):
    # orbits of 1 - z^2 - z approach the boundary only asymptotically; a wide margin cannot resolve them
    sc = {"domain": {"kind": "disc"}, "command": "trotter", "fields": [{"builtin": "tanh"}, {"builtin": "contraction"}],
          "params": {"t": 5, "m_ladder": [64, 128]}, "tolerances": {"escape_margin": 0.5}}
    assert run(write(tmp_path, sc), tmp_path / "out", quiet=True) == 3
    rep = load_report(tmp_path / "out")
    assert rep["status"] == "numerical-failure"
    assert "BoundaryResolutionError" in rep["error"]


def test_violations_are_witnessed(tmp_path):
    run(SCENARIOS / "flow_constant.json", tmp_path, quiet=True)
    rep = load_report(tmp_path)
    assert rep["violations"]
    assert rep["status"] == "violations"


# --- determinism and seeds


def test_rerun_identical(tmp_path):
    sc = SCENARIOS / "product_euler_ball.json"
    run(sc, tmp_path / "a", quiet=True)
    run(sc, tmp_path / "b", quiet=True)
    assert (tmp_path / "a" / "data.csv").read_bytes() == (tmp_path / "b" / "data.csv").read_bytes()
    assert load_report(tmp_path / "a")["verdicts"] == load_report(tmp_path / "b")["verdicts"]


def test_seed_override(tmp_path):
    sc = {"domain": {"kind": "disc"}, "command": "check-generator", "field": {"builtin": "contraction"},
          "params": {"method": "dissipative", "pairs": 50}, "seed": 3}
    p = write(tmp_path, sc)
    assert resolve(sc, 2**64 - 1)["seed"] == 2**64 - 1
    assert main(["run", str(p), "--out", str(tmp_path / "a"), "--seed", "9", "--quiet"]) == 0
    assert load_report(tmp_path / "a")["scenario"]["seed"] == 9
    assert main(["run", str(p), "--out", str(tmp_path / "b"), "--seed", str(2**64), "--quiet"]) == 2


# --- schema and catalog


def test_docs_schema_is_current():
    assert json.loads((ROOT / "docs" / "scenario.schema.json").read_text()) == json.loads(json.dumps(SCHEMA))


def test_every_catalog_name_is_accepted():
    for name in B.FIELDS:
        VALIDATOR.validate({"domain": {"kind": "disc"}, "command": "check-generator", "field": {"builtin": name}})
    for name in B.HERGLOTZ:
        VALIDATOR.validate({"domain": {"kind": "disc"}, "command": "evolve", "herglotz": {"builtin": name},
                            "params": {"t": 1, "z": 0}})
    for name in B.FAMILIES:
        VALIDATOR.validate({"domain": {"kind": "disc"}, "command": "audit-ef", "family": {"builtin": name}})


def test_catalog_contents(capsys):
    assert main(["list-builtins", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    formulas = {r["formula"] for r in rows}
    assert "1−z²" in formulas
    assert "piecewise_demo" in {r["name"] for r in rows if r["type"] == "herglotz"}
    assert main(["list-builtins"]) == 0
    assert "Berkson-Porta" in capsys.readouterr().out


def test_every_command_has_defaults():
    assert set(DEFAULT_PARAMS) == set(COMMANDS)


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "loewnerkit", "run", str(SCENARIOS / "malformed_field.json"),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 2
    assert "schema violation" in res.stderr
