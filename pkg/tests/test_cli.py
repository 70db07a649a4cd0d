import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from bilateral_closeout.cli import OUTPUT_DIR_ENV, main, parse_grid


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv, "--format", "json")
    assert code == 0, text
    return json.loads(text)


@pytest.mark.parametrize(
    "convention, want",
    [("risk-free-closeout", 359.4849), ("substitution-closeout", 316.6368), ("risk-free", 860.7080)],
)
def test_price_examples(convention, want):
    doc = run_json("price", "--convention", convention)
    assert doc["result"]["value"] / 1e6 == pytest.approx(want, abs=1e-4)
    assert doc["parameters"]["lambda_borrower"] == 0.2


def test_price_table_and_csv():
    code, table = run("price")
    assert code == 0 and "mn" in table
    code, text = run("price", "--format", "csv")
    rows = dict(csv.reader(io.StringIO(text)))
    assert float(rows["result.value"]) / 1e6 == pytest.approx(359.4849, abs=1e-4)


def test_price_with_context():
    doc = run_json("price", "--t", "2.5", "--context", "both-alive")
    assert doc["result"]["value"] > 0
    assert run("price", "--t", "2.5")[0] == 2
    assert run("price", "--t", "2", "--context", "defaulted", "--context-party", "lender")[0] == 2


def test_price_schedule_file(tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"notional": 1e9, "cashflows": [{"t": 5.0, "amount": 1.0}]}))
    doc = run_json("price", "--schedule", str(f))
    assert doc["result"]["value"] / 1e6 == pytest.approx(359.4849, abs=1e-4)
    f.write_text(json.dumps({"notional": 1e9, "cashflows": [{"t": 1.0, "amount": 1.0}, {"t": 2.0, "amount": -1.0}]}))
    assert run("price", "--schedule", str(f))[0] == 2


def test_parse_grid():
    assert np.allclose(parse_grid("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1.0])
    assert parse_grid("0:0:1").tolist() == [0.0]
    for bad in ("0:1", "1:0:0.1", "0:1:0", "a:b:c", "-1:1:0.5"):
        with pytest.raises(Exception):
            parse_grid(bad)


def test_grid_single_cell_matches_price():
    doc = run_json("grid", "--grid", "0:0:1", "--convention", "substitution-closeout")
    one = run_json("price", "--lambda-borrower", "0", "--lambda-lender", "0", "--convention", "substitution-closeout")
    assert doc["values"][0][0] == pytest.approx(one["result"]["value"] / 1e9, rel=1e-14)


def test_grid_point_matches_price():
    doc = run_json("grid", "--lender-grid", "0.04:0.04:1", "--borrower-grid", "0.2:0.2:1")
    assert doc["values"][0][0] * 1e9 / 1e6 == pytest.approx(359.4849, abs=1e-4)


def test_grid_diff_nonnegative():
    doc = run_json("grid", "--grid", "0:1:0.25", "--diff", "--recovery-borrower", "0.4")
    assert np.min(np.array(doc["values"], dtype=float)) >= -1e-15


def test_grid_comonotonic_diagonal_is_blank():
    doc = run_json("grid", "--grid", "0:1:0.5", "--dependence", "comonotonic")
    assert doc["values"][1][1] is None and doc["values"][0][0] is not None
    code, text = run("grid", "--grid", "0:1:0.5", "--dependence", "comonotonic", "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][0] == "lambda_lender" and len(rows) == 4


@pytest.mark.parametrize("grid", ["0:1", "1:0:0.1", "0:1:-0.1", "x"])
def test_grid_malformed(grid):
    assert run("grid", "--grid", grid)[0] == 2


def test_grid_workers_agree():
    a = run_json("grid", "--grid", "0:1:0.1")
    b = run_json("grid", "--grid", "0:1:0.1", "--workers", "4")
    assert a["values"] == b["values"]


def test_scenario_command():
    doc = run_json("scenario")
    rep = doc["report"]
    assert rep["perspective"] == "borrower"
    assert rep["jump"] / 1e6 == pytest.approx(-348.8, abs=0.1)
    code, table = run("scenario", "--convention", "substitution-closeout")
    assert code == 0 and "jump" in table


def test_scenario_errors():
    assert run("scenario", "--default-time", "7")[0] == 2
    args = ("--dependence", "comonotonic", "--lambda-borrower", "0.036", "--default-party", "borrower")
    assert run("scenario", *args)[0] == 2
    assert run("scenario", "--dependence", "comonotonic", "--lambda-borrower", "0.04")[0] == 2


def test_collateral_command(tmp_path):
    doc = run_json("collateral", "--dt", "1/365", "--path-csv", str(tmp_path / "p.csv"))
    assert doc["match"]["collateral_value"] / 1e6 == pytest.approx(927.74, abs=0.01)
    assert abs(doc["match"]["contract_view_residual"]) < 1
    assert doc["path"]["max_deviation"] <= doc["path"]["error_bound"]
    assert doc["path"]["max_abs_net_flow"] == 0.0
    assert (tmp_path / "p.csv").read_text().startswith("t,")
    doc = run_json("collateral", "--convention", "risk-free-closeout")
    assert doc["match"]["contract_view_residual"] / 1e6 == pytest.approx(365.04, abs=0.01)


def test_collateral_errors():
    assert run("collateral", "--dt", "0")[0] == 2
    assert run("collateral", "--dt", "1/0")[0] == 2
    assert run("collateral", "--default-time", "5")[0] == 2


def test_validate_rejects_zero_paths():
    assert run("validate", "--paths", "0")[0] == 2


def test_validate_is_byte_identical(tmp_path):
    outs = []
    for k, workers in enumerate((1, 3, 1)):
        target = tmp_path / f"v{k}.json"
        assert main(["validate", "--paths", "4096", "--sets", "3", "--workers", str(workers), "--output", str(target)]) in (0, 1)
        outs.append(target.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    doc = json.loads(outs[0])
    assert len(doc["cases"]) == 12 and doc["config"]["paths"] == 4096


def test_validate_seed_changes_output():
    a = run("validate", "--paths", "2048", "--sets", "2", "--seed", "1")[1]
    b = run("validate", "--paths", "2048", "--sets", "2", "--seed", "2")[1]
    assert a != b


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"convention": "substitution-closeout", "lambda-borrower": 0.2}))
    doc = run_json("price", "--config", str(cfg))
    assert doc["result"]["value"] / 1e6 == pytest.approx(316.6368, abs=1e-4)
    # explicit flags override the file
    doc = run_json("price", "--config", str(cfg), "--convention", "risk-free-closeout")
    assert doc["result"]["value"] / 1e6 == pytest.approx(359.4849, abs=1e-4)
    cfg.write_text(json.dumps({"no_such_flag": 1}))
    assert run("price", "--config", str(cfg))[0] == 2
    cfg.write_text(json.dumps({"convention": "bogus"}))
    assert run("price", "--config", str(cfg))[0] == 2


def test_output_directory_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert main(["price", "--output", "sub/out.json", "--format", "json"]) == 0
    assert json.loads((tmp_path / "sub" / "out.json").read_text())["command"] == "price"


def test_echo_round_trip(tmp_path):
    doc = run_json("price", "--lambda-lender", "0.1", "--recovery-borrower", "0.4")
    cfg = tmp_path / "echo.json"
    params = {k: v for k, v in doc["parameters"].items() if v is not None}
    cfg.write_text(json.dumps(params))
    again = run_json("price", "--config", str(cfg))
    assert again["result"] == doc["result"]


@pytest.mark.parametrize("argv", [["price", "--r", "-1"], ["price", "--recovery-borrower", "2"], ["nope"], []])
def test_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bilateral_closeout", "price", "--format", "json"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["command"] == "price"
