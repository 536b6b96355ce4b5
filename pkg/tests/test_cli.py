import csv
import json
import math
import subprocess
import sys

import jsonschema
import pytest

from sloccgen import catalog, cli
from sloccgen.slocc import STATE_SCHEMA, post_select


def run(*args, cwd=None):
    proc = subprocess.run([sys.executable, "-m", "sloccgen.cli", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)
    return proc.returncode, proc.stdout, proc.stderr


def field(stdout, name):
    for line in stdout.splitlines():
        if line.startswith(name + ":"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"no {name!r} in output:\n{stdout}")


def test_simulate_w3_boson(tmp_path):
    path = tmp_path / "w3.json"
    assert run("catalog", "w-complete", "--n", 3, "--stats", "boson", "--out", path)[0] == 0
    code, out, _ = run("simulate", path, "--target", "w")
    assert code == 0
    assert field(out, "probability") == "0.222222222222"
    assert float(field(out, "fidelity[w]")) == pytest.approx(1)


def test_simulate_json_output_validates(tmp_path):
    path = tmp_path / "c.json"
    run("catalog", "cluster", "--n", 4, "--stats", "fermion", "--out", path)
    code, out, _ = run("simulate", path, "--target", "cluster", "--json")
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, cli.REPORT_SCHEMA)
    jsonschema.validate(doc["state"], STATE_SCHEMA)
    assert doc["report"]["fidelities"]["cluster"] == pytest.approx(1)


def test_simulate_unnormalized_names_qubit(tmp_path):
    path = tmp_path / "w3.json"
    run("catalog", "w-complete", "--n", 3, "--stats", "boson", "--out", path)
    d = json.loads(path.read_text())
    d["qubits"][1]["amplitudes"][0]["re"] = 0.9
    path.write_text(json.dumps(d))
    code, _, err = run("simulate", path)
    assert code == 2
    assert "qubit 1" in err


def test_simulate_malformed_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 2, "statistics": "boson", "qubits": [{"source_id": 0}]}))
    code, _, err = run("simulate", path)
    assert code == 2 and "qubits[0]" in err


def test_simulate_vanishing(tmp_path):
    path = tmp_path / "w3f.json"
    run("catalog", "w-complete", "--n", 3, "--stats", "fermion", "--out", path)
    code, out, _ = run("simulate", path)
    assert code == 3
    assert float(field(out, "probability")) == 0


def test_catalog_examples(tmp_path):
    path = tmp_path / "ghz.json"
    assert run("catalog", "ghz", "--n", 4, "--stats", "boson", "--out", path)[0] == 0
    assert field(run("simulate", path)[1], "probability") == "0.125"
    assert run("catalog", "dicke-complete", "--n", 3, "--stats", "boson", "--out", tmp_path / "x.json")[0] == 2
    assert run("catalog", "unknown", "--n", 3, "--stats", "boson", "--out", tmp_path / "x.json")[0] == 2
    path = tmp_path / "star.json"
    run("catalog", "w-star", "--n", 5, "--stats", "fermion", "--out", path)
    assert float(field(run("simulate", path)[1], "probability")) == pytest.approx(0.2)


def test_catalog_simulate_round_trip_is_exact(tmp_path):
    path = tmp_path / "d.json"
    run("catalog", "dicke-star4", "--stats", "fermion", "--out", path)
    code, out, _ = run("simulate", path, "--json")
    doc = json.loads(out)
    assert doc["report"]["probability"] == post_select(catalog.dicke_star4("fermion")).probability


def test_verify_report(capsys):
    code = cli.main(["verify"])
    out = capsys.readouterr().out
    rows = [line for line in out.splitlines() if line.endswith(("PASS", "FAIL"))]
    assert len(rows) >= 25
    assert "INFO dicke-chain4 boson" in out and "0.1234" in out and "0.1243" in out
    # the fermionic chain Dicke row cannot match its listed value
    fails = [r for r in rows if r.endswith("FAIL")]
    assert len(fails) == 1 and fails[0].startswith("dicke-chain4") and "fermion" in fails[0]
    assert code == 1
    # idempotent
    assert cli.main(["verify"]) == code
    assert capsys.readouterr().out.splitlines()[:-1] == out.splitlines()[:-1]


def test_verify_all_pass_exits_zero(monkeypatch, capsys):
    cases = [e for e in catalog.verify_cases() if not (e.name == "dicke-chain4" and e.stats.value == "fermion")]
    monkeypatch.setattr(catalog, "verify_cases", lambda: cases)
    assert cli.main(["verify"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_verify_tampered_tolerance(monkeypatch, capsys):
    import dataclasses

    cases = catalog.verify_cases()
    tampered = [dataclasses.replace(cases[0], expected=dataclasses.replace(cases[0].expected, probability=0.5))]
    monkeypatch.setattr(catalog, "verify_cases", lambda: tampered)
    assert cli.main(["verify"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_tradeoff(tmp_path):
    out_csv = tmp_path / "w3.csv"
    code, out, _ = run("tradeoff", "--class", "w", "--n", 3, "--stats", "boson", "--threshold", "2/3",
                       "--samples", 20000, "--seed", 42, "--out", out_csv)
    assert code == 0
    assert float(out.split("global max probability:")[1].split()[0]) >= 0.44
    with open(out_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["fidelity_bin_low", "fidelity_bin_high", "max_probability"]
    assert len(rows[0]) == 3 + 9
    for row in rows[1:]:
        assert 0 <= float(row[2]) <= 1


def test_tradeoff_bad_parameters(tmp_path):
    args = ["tradeoff", "--class", "w", "--n", 3, "--stats", "boson", "--out", tmp_path / "x.csv", "--seed", 1]
    assert run(*args, "--samples", 0)[0] == 2
    assert run(*args, "--samples", 10, "--threshold", "abc")[0] == 2
    assert run("tradeoff", "--class", "dicke", "--n", 5, "--stats", "boson", "--samples", 10,
               "--out", tmp_path / "x.csv")[0] == 2


def test_tradeoff_empty_result(tmp_path):
    out_csv = tmp_path / "e.csv"
    code, out, _ = run("tradeoff", "--class", "w", "--n", 3, "--stats", "fermion", "--samples", 300,
                       "--seed", 0, "--out", out_csv)
    assert code == 0 and "warning" in out
    assert len(out_csv.read_text().splitlines()) == 1


def test_matchings(tmp_path):
    bell = tmp_path / "b.json"
    run("catalog", "bell-remote", "--stats", "boson", "--out", bell)
    code, out, _ = run("matchings", bell, "--sigma", "ud")
    assert code == 0 and field(out, "matchings") == "1"
    assert complex(field(out, "total")) == pytest.approx(0.5)

    w3 = tmp_path / "w3.json"
    run("catalog", "w-complete", "--n", 3, "--stats", "boson", "--out", w3)
    code, out, _ = run("matchings", w3, "--sigma", "udd")
    assert field(out, "matchings") == "2"
    assert complex(field(out, "total")) == pytest.approx(2 / (3 * math.sqrt(3)))
    # the total equals the unnormalized amplitude the simulator uses
    s_k = post_select(catalog.w_complete(3, "boson")).raw[0b110]
    assert complex(field(out, "total")) == pytest.approx(s_k, abs=1e-11)

    code, out, _ = run("matchings", w3, "--sigma", "uuu")
    assert field(out, "matchings") == "0" and complex(field(out, "total")) == 0
    assert run("matchings", w3, "--sigma", "uxd")[0] == 2
    assert run("matchings", w3, "--sigma", "ud")[0] == 2


def test_usage_errors():
    assert run()[0] == 2
    assert run("simulate", "/nonexistent/file.json")[0] == 2
