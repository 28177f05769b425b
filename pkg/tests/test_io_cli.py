import copy
import csv
import io
import json
import os
import subprocess
import sys

import pytest

from pricechain.cli import main, resolve_seed
from pricechain.exceptions import ConfigurationError
from pricechain.io import (
    SOLUTION_COLUMNS,
    build_scenario,
    load_document,
    scenario_to_dict,
    solution_csv,
    svg_from_csv,
    validate_document,
)
from pricechain.static_pricing import solve_chain

from conftest import FIXTURES, S2_PATH

S2_CSV = (
    "model,cost,accuracy,price,alloc_lo,alloc_hi,revenue,profit,case_kind\n"
    "1,0.05,0.6,0.3,0.3,0.6,0.09,0.04,single\n"
    "2,0.1,0.9,1.2,0.6,0.9,0.36,0.26,no-competition-adjacent\n"
)


@pytest.fixture
def s2_doc():
    return load_document(S2_PATH)


def fixture(name):
    return os.path.join(FIXTURES, name)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# --- documents -------------------------------------------------------------------


def test_s2_document_builds(s2_doc):
    sf = build_scenario(s2_doc)
    assert sf.mode == "static" and sf.seed == 0
    assert sf.scenario.accuracies == (0.6, 0.9)
    assert all(rep.passed for rep in sf.checks.values())
    assert sf.dynamic["init"] == [0.1, 0.1]


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d.pop("distribution"), "distribution"),
        (lambda d: d["models"][0]["utility"].update(theta="big"), "models/0/utility/theta"),
        (lambda d: d.update(colour="red"), "colour"),
        (lambda d: d["distribution"].update(type="gamma"), "distribution/type"),
        (lambda d: d.update(mode="sideways"), "mode"),
    ],
)
def test_schema_errors_name_the_path(s2_doc, mutate, where):
    doc = copy.deepcopy(s2_doc)
    mutate(doc)
    with pytest.raises(ConfigurationError) as err:
        validate_document(doc)
    assert where in str(err.value)


def test_unknown_accuracy_form_is_named(s2_doc):
    doc = copy.deepcopy(s2_doc)
    doc["models"][1]["utility"]["accuracy_form"] = "cubic"
    with pytest.raises(ConfigurationError, match="cubic"):
        build_scenario(doc)


def test_non_increasing_costs_name_the_model(s2_doc):
    doc = copy.deepcopy(s2_doc)
    doc["models"][1]["cost"] = 0.05
    with pytest.raises(ConfigurationError, match="models/1/cost"):
        build_scenario(doc)


def test_incompatible_family_rejected(s2_doc):
    doc = copy.deepcopy(s2_doc)
    doc["models"][1]["utility"] = {"accuracy_form": "linear", "theta": 2.0, "phi": 3.0}
    with pytest.raises(ConfigurationError, match="models 1,2"):
        build_scenario(doc)


def test_ultra_dual_rejected_on_load(s2_doc):
    doc = copy.deepcopy(s2_doc)
    doc["mode"] = "ultra-dual"
    with pytest.raises(ConfigurationError, match="ultra-dual"):
        build_scenario(doc)


def test_mode_specific_fields(s2_doc):
    doc = copy.deepcopy(s2_doc)
    doc["mode"] = "dual"
    with pytest.raises(ConfigurationError, match="menu_price"):
        build_scenario(doc)
    doc = load_document(fixture("qd2.json"))
    del doc["models"][0]["utility"]["buyer_terms"]
    with pytest.raises(ConfigurationError, match="buyer_terms"):
        build_scenario(doc)


def test_bad_json_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_document(str(p))


def test_scenario_round_trip(s2):
    doc = scenario_to_dict(s2)
    again = build_scenario(doc).scenario
    assert again.accuracies == s2.accuracies
    assert solution_csv(solve_chain(again)) == S2_CSV


# --- outputs ---------------------------------------------------------------------


def test_solution_csv_exact(s2_solution):
    assert solution_csv(s2_solution) == S2_CSV
    rows = list(csv.DictReader(io.StringIO(S2_CSV)))
    assert tuple(rows[0]) == SOLUTION_COLUMNS


def test_svg_from_csv():
    svg = svg_from_csv(S2_CSV, 0.05, 1.0)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<rect") >= 2 and "T1" in svg and "T2" in svg


# --- seeds -----------------------------------------------------------------------


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv("PRICECHAIN_SEED", raising=False)
    assert resolve_seed(None, 4) == 4
    monkeypatch.setenv("PRICECHAIN_SEED", "9")
    assert resolve_seed(None, 4) == 9
    assert resolve_seed(2, 4) == 2


def test_env_seed_changes_robustness_trials(monkeypatch, capsys, tmp_path):
    monkeypatch.delenv("PRICECHAIN_SEED", raising=False)
    base = tmp_path / "a.csv"
    assert main(["robustness", S2_PATH, "--trials", "5", "--out", str(base)]) == 0
    monkeypatch.setenv("PRICECHAIN_SEED", "123")
    env = tmp_path / "b.csv"
    assert main(["robustness", S2_PATH, "--trials", "5", "--out", str(env)]) == 0
    flag = tmp_path / "c.csv"
    assert main(["robustness", S2_PATH, "--trials", "5", "--seed", "123", "--out", str(flag)]) == 0
    capsys.readouterr()
    assert env.read_text() != base.read_text()
    assert env.read_text() == flag.read_text()


# --- commands --------------------------------------------------------------------


def test_solve_static_stdout(capsys):
    code, out, _ = run(["solve", S2_PATH], capsys)
    assert code == 0 and out == S2_CSV


def test_solve_outputs_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["solve", S2_PATH, "--out", str(a)]) == 0
    assert main(["solve", S2_PATH, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes() == S2_CSV.encode()


def test_solve_svg_and_report(tmp_path, capsys):
    svg, rep = tmp_path / "s.svg", tmp_path / "r.json"
    assert main(["solve", S2_PATH, "--svg", str(svg), "--report", str(rep)]) == 0
    assert svg.read_text().startswith("<svg")
    data = json.loads(rep.read_text())
    assert data["metadata"]["seed"] == 0 and data["metadata"]["mode"] is None
    assert set(data["checks"].values()) == {"pass"}


def test_solve_without_candidates_matches(capsys):
    code, out, _ = run(["solve", S2_PATH, "--no-separable-candidates"], capsys)
    assert code == 0 and out == S2_CSV


def test_solve_dynamic_with_trace(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    code, out, _ = run(["solve", S2_PATH, "--mode", "dynamic", "--trace", str(trace)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["price"] for r in rows] == ["0.3", "1.2"]
    assert rows[1]["case_kind"] == "no-compete-left/no-compete-right"
    lines = trace.read_text().splitlines()
    assert lines[0] == "iteration,price_1,price_2"
    assert lines[1] == "0,0.1,0.1"


def test_solve_dynamic_not_converged(capsys):
    code, _, err = run(["solve", S2_PATH, "--mode", "dynamic", "--init", "1.2", "0", "--max-iter", "1"], capsys)
    assert code == 3 and "no equilibrium" in err


def test_solve_quasi_dual_and_dual(capsys):
    code, out, _ = run(["solve", fixture("qd2.json"), "--mode", "quasi-dual"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[1]["case_kind"] == "competition-with-1"
    code, out, _ = run(["solve", fixture("s2_dual.json")], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["price"] for r in rows] == ["0.3", "1.2"]


def test_mode_mismatch(capsys):
    code, _, err = run(["solve", fixture("qd2.json"), "--mode", "static"], capsys)
    assert code == 2 and "quasi-dual" in err


def test_ultra_dual_flag(capsys):
    code, _, err = run(["solve", S2_PATH, "--mode", "ultra-dual"], capsys)
    assert code == 2 and "ultra-dual is not supported" in err


def test_missing_file(capsys):
    code, _, err = run(["solve", "nope.json"], capsys)
    assert code == 2 and err.startswith("pricechain:")


def test_sweep(tmp_path, capsys):
    ev = tmp_path / "ev.csv"
    code, out, _ = run(["sweep", fixture("block.json"), "--evaluated", str(ev)], capsys)
    assert code == 0
    assert len(ev.read_text().splitlines()) == 2
    assert "block-coverage" in out
    code, _, err = run(["sweep", S2_PATH], capsys)
    assert code == 2 and "cost_grid" in err


def test_curve(tmp_path, capsys):
    out_csv = tmp_path / "c.csv"
    code, out, _ = run(["curve", S2_PATH, "--model", "2", "--step", "1e-3", "--out", str(out_csv)], capsys)
    assert code == 0
    fields = dict(line.split(": ") for line in out.strip().splitlines())
    assert fields["continuous"] == "yes"
    assert float(fields["max_jump"]) <= 5e-3
    assert len(out_csv.read_text().splitlines()) == 1202
    assert run(["curve", S2_PATH, "--model", "3"], capsys)[0] == 2
    assert run(["curve", S2_PATH, "--model", "1", "--step", "0"], capsys)[0] == 2


def test_robustness_command(capsys):
    code, out, err = run(["robustness", S2_PATH, "--trials", "3"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 6 and all(r["within"] == "yes" for r in rows)
    assert "within bounds: yes" in err
    code, *_ = run(["robustness", S2_PATH, "--trials", "3", "--perturbation", "slope"], capsys)
    assert code == 0


def test_check_file_and_random(capsys):
    code, out, _ = run(["check", S2_PATH], capsys)
    assert code == 0 and "axioms: pass" in out and "connectivity: pass" in out
    code, out, _ = run(["check", "--random", "2", "--seed", "5"], capsys)
    assert code == 0 and out.strip().endswith("2/2 scenarios passed")
    code, _, err = run(["check"], capsys)
    assert code == 2


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "pricechain.cli", "solve", S2_PATH],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout == S2_CSV
