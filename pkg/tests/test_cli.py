import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from definetti_kit import cli
from definetti_kit.logvalue import LogValue


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


def test_statistics_bound_row(capsys):
    code, doc, _ = run_json(capsys, "bounds", "--lemma1", "--k", "10000", "--delta", "0.05")
    assert code == 0
    v = doc["rows"][0]["value"]
    assert set(v) == {"sign", "log_magnitude", "display"}
    assert float(LogValue.from_dict(v)) == pytest.approx(1.111035509197121647e-4, rel=1e-12)
    m = doc["manifest"]
    assert m["command"] == "bounds" and m["passed"] and m["parameters"]["k"] == "10000"


def test_energy_cut_grid_as_csv(capsys):
    code, out, _ = run(capsys, "bounds", "--lemma2", "--n0", "100", "--delta-grid", "0:0.1:11", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 11
    assert float(rows[3]["delta"]) == pytest.approx(0.3)
    # 17 significant digits survive a round trip
    v = float(rows[5]["value.log_magnitude"])
    assert format(v, ".17g") == rows[5]["value.log_magnitude"]


def test_definetti_error_row(capsys):
    code, doc, _ = run_json(capsys, "bounds", "--definetti", "--mode", "4kn", "--k", "1", "--d", "2", "--n", "2")
    assert code == 0
    assert float(LogValue.from_dict(doc["rows"][0]["value"])) == pytest.approx(0.71653131057378925, rel=1e-14)


def test_json_round_trip_is_idempotent(capsys):
    _, out, _ = run(capsys, "budget", "--m", "20", "--n0", "60", "--eps", "1e-9", "--dimx", "2")
    doc = json.loads(out)
    again = json.dumps(json.loads(json.dumps(doc, indent=2)), indent=2) + "\n"
    assert again == out


def test_outputs_are_deterministic(capsys):
    argv = ("definetti-demo", "--d", "2", "--k", "1", "--n", "2", "--family-count", "300", "--seed", "11")
    _, a, _ = run_json(capsys, *argv)
    _, b, _ = run_json(capsys, *argv)
    assert a["rows"] == b["rows"] and a["summary"] == b["summary"]


def test_budget_rows(capsys):
    code, doc, _ = run_json(capsys, "budget", "--m", "20", "--n0", "60", "--eps", "1e-9", "--dimx", "2")
    assert code == 0
    row = doc["rows"][0]
    assert row["mu"] == 0.25 and row["window"] == [60, 89]
    code, doc, _ = run_json(capsys, "budget", "--m", "2")
    assert code == 0
    assert doc["rows"][0]["feasibility_flags"]["window_nonempty"] is False
    code, doc, _ = run_json(capsys, "budget", "--find-min-m", "--target", "1e-10")
    assert code == 0 and doc["rows"][0]["found"]
    assert doc["rows"][0]["m_star"] == doc["rows"][0]["report"]["m"]


def test_stats_check_small_k_reports_documented_edge(capsys):
    code, doc, _ = run_json(capsys, "stats-check", "--k-max", "1")
    assert code == 0
    row = doc["rows"][0]
    assert row["documented_deviation"] and row["exact_value"] == pytest.approx(math.e)
    assert float(LogValue.from_dict(row["max_moment"])) == pytest.approx(math.e, rel=1e-15)


def test_stats_check_full_grid(capsys):
    code, doc, _ = run_json(capsys, "stats-check", "--k-max", "40")
    assert code == 0 and doc["summary"]["violations"] == 0
    assert doc["manifest"]["duration_s"] < 60


def test_quantum_stats_check(capsys):
    code, doc, _ = run_json(capsys, "stats-check", "--quantum", "--parts", "6", "--seed", "7")
    assert code == 0 and doc["summary"]["passed"]
    assert {r["check"] for r in doc["rows"]} == {"lemma1", "support_restriction"}


def test_gamma_grid_example_all_margins_nonnegative(capsys):
    code, doc, _ = run_json(capsys, "gamma", "--n0", "100", "--ncut", "400", "--delta-grid", "0:0.01:6")
    assert code == 0
    assert [r["delta"] for r in doc["rows"]] == pytest.approx([0.0, 0.01, 0.02, 0.03, 0.04, 0.05])
    assert all(r["margin"] >= 0 for r in doc["rows"])


def test_gamma_table_and_violation_exit(capsys):
    code, doc, _ = run_json(capsys, "gamma", "--n0", "16", "--ncut", "64", "--delta-grid", "0,0.5")
    assert code == 0
    assert doc["rows"][0]["status"] == "infeasible"
    code, doc, _ = run_json(capsys, "gamma", "--n0", "100", "--ncut", "400", "--delta-grid", "0.002",
                            "--no-doubled")
    assert code == 1 and doc["rows"][0]["status"] == "violated"


def test_generic_gamma_from_matrix_files(capsys, tmp_path):
    u, p = tmp_path / "u.mat", tmp_path / "p.mat"
    U1 = np.diag([0.1, 0.2, 1.0]).astype(complex)
    U1[0, 1] = U1[1, 0] = 0.05
    cli.write_matrix(u, U1)
    cli.write_matrix(p, np.diag([1.0, 1.0, 0.0]))
    assert np.array_equal(cli.read_matrix(u), U1)
    code, doc, _ = run_json(capsys, "gamma", "--generic", "--u1-file", str(u), "--proj-file", str(p),
                            "--delta", "0.1")
    assert code == 0
    row = doc["rows"][0]
    assert row["certificate"] is True
    assert 0.0 < row["gamma"] <= 0.1 + 1e-9


def test_demo_pipelines(capsys):
    code, doc, _ = run_json(capsys, "definetti-demo", "--iid", "--family-count", "300")
    assert code == 0 and doc["rows"][0]["own_vector_overlap"] == pytest.approx(1.0, abs=1e-12)
    code, doc, _ = run_json(capsys, "definetti-demo", "--theorem1", "--ambient", "3", "--subspace", "2",
                            "--k", "1", "--n", "1", "--family-count", "64")
    assert code == 0
    assert doc["rows"][0]["fidelity"] > doc["rows"][0]["bound"] - doc["rows"][0]["tolerance"]


def test_csv_side_file(capsys, tmp_path):
    path = tmp_path / "rows.csv"
    code, _, _ = run(capsys, "bounds", "--lemma3", "--k", "10", "--n", "20,40", "--csv-out", str(path))
    assert code == 0
    assert len(list(csv.DictReader(open(path)))) == 2


def test_exit_codes_for_bad_input(capsys):
    assert run(capsys, "bounds")[0] == 2
    assert run(capsys, "bounds", "--lemma1", "--k", "x", "--delta", "0.1")[0] == 2
    assert run(capsys, "bounds", "--lemma2", "--n0", "16", "--delta-grid", "0:1")[0] == 2
    assert run(capsys, "budget")[0] == 2
    code, _, err = run(capsys, "definetti-demo", "--d", "2", "--k", "4", "--n", "6")
    assert code == 3 and "guard" in err
    with pytest.raises(SystemExit) as info:
        cli.main(["bounds", "--nonsense"])
    assert info.value.code == 2


def test_grid_parsing():
    assert cli.parse_grid("0:0.5:3") == [0.0, 0.5, 1.0]
    assert cli.parse_grid("0:0.1:11")[-1] == 1.0
    assert cli.parse_grid("0.1,0.2") == [0.1, 0.2]
    with pytest.raises(cli.UsageError):
        cli.parse_grid("0:1:0")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "definetti_kit", "bounds", "--theorem2-delta", "--n", "1000000",
                           "--eps", str(4 / math.e ** 2)], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["rows"][0]["value"] == pytest.approx(0.016931471805599453, rel=1e-12)
