import csv
import io
import json

import pytest

from commcoord.cli import SWEEP_COLUMNS, main
from commcoord.scenario import dump_scenario, table3_scenario


def _body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_sweep_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["sweep", "--scenario", "table3", "--rho", "0,8", "--grid", "21", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(io.StringIO("\n".join(_body(a.read_text())))))
    assert [float(r["rho"]) for r in rows] == [0.0, 8.0]
    assert float(rows[0]["Optimal"]) == pytest.approx(float(rows[0]["Always-comm"]), abs=0.05)
    assert float(rows[1]["Optimal"]) == pytest.approx(float(rows[1]["Never-comm"]), abs=1e-6)


def test_sweep_empty_rho_list_writes_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    assert main(["sweep", "--scenario", "table3", "--rho", "", "--out", str(out)]) == 0
    body = _body(out.read_text())
    assert body == [",".join(SWEEP_COLUMNS)]
    assert any(line.startswith("# scenario:") for line in out.read_text().splitlines())


def test_solve_from_file(tmp_path, capsys):
    path = tmp_path / "s.json"
    dump_scenario(table3_scenario(1.0), path)
    assert main(["solve", "--scenario", str(path), "--grid", "21"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["reproducibility"]["scenario"] == table3_scenario(1.0).digest()
    assert doc["report"]["iterations"] > 0
    assert doc["initial_comm"].startswith("γ¹=")


def test_simulate_command(tmp_path):
    out, trace = tmp_path / "sim.json", tmp_path / "trace.csv"
    assert main(["simulate", "--scenario", "table3", "--rho", "8", "--grid", "21", "--episodes", "50",
                 "--seed", "4", "--trace", str(trace), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["simulation"]["episodes"] == 50 and doc["reproducibility"]["seed"] == 4
    assert trace.read_text().startswith("episode,t,phase")


def test_export_command(tmp_path):
    out = tmp_path / "d.pomdp"
    assert main(["export-pomdp", "--scenario", "table3", "--rho", "1", "--out", str(out)]) == 0
    assert "states: " in out.read_text()


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["solve", "--scenario", str(bad)]) == 2
    assert main(["export-pomdp", "--scenario", "table3", "--erasure", "0.2"]) == 2
    assert "error:" in capsys.readouterr().err


def test_baselines_command(capsys):
    assert main(["baselines", "--scenario", "table3", "--rho", "8", "--grid", "21"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["Optimal"] == pytest.approx(doc["Never-comm"], abs=1e-6)
