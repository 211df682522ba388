import csv
import io
import json

import pytest

from padic_heat.cli import main
from padic_heat.radial import ball_indicator_lcf, constant_lcf, encode_lcf


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def problem(phi, **extra):
    obj = {"params": {"p": 2, "n": 1, "alpha": 1.0, "a": 1.0, "T": 1.0}, "phi": encode_lcf(phi)}
    obj.update(extra)
    return obj


def test_kernel_table(capsys):
    assert main(["kernel", "--p", "2", "--n", "1", "--alpha", "1", "--a", "1", "--t", "1"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 21 and rows[0]["m"] == "-10"
    assert float(rows[10]["cdf"]) > float(rows[9]["cdf"])


def test_kernel_check_and_json(capsys, tmp_path):
    out = tmp_path / "k.json"
    summary = tmp_path / "s.json"
    code = main(["kernel", "--p", "3", "--n", "1", "--alpha", "0.5", "--a", "1", "--t", "0.1",
                 "--m-range", "-2", "2", "--check", "--format", "json", "--out", str(out),
                 "--summary", str(summary)])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0 and lines and all(line.startswith("PASS") for line in lines)
    assert len(json.loads(out.read_text())) == 5
    assert json.loads(summary.read_text())["passed"] is True


def test_kernel_rejects_nonpositive_time(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["kernel", "--p", "2", "--n", "1", "--alpha", "1", "--a", "1", "--t", "0"])
    assert exc.value.code == 2


def test_kernel_rejects_empty_range(capsys):
    assert main(["kernel", "--p", "2", "--n", "1", "--alpha", "1", "--a", "1", "--t", "1",
                 "--m-range", "3", "1"]) == 2
    assert "--m-range" in capsys.readouterr().err


def test_solve_with_check(tmp_path, capsys):
    f = write(tmp_path, "p.json", problem(ball_indicator_lcf(2, 1, 0)))
    out = tmp_path / "u.csv"
    assert main(["solve", "-f", f, "--check", "--out", str(out)]) == 0
    assert "PASS cauchy residual" in capsys.readouterr().out
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 12
    assert rows[0]["m"] == "" and max(float(r["residual"]) for r in rows) < 1e-5


def test_solve_constant_data(tmp_path, capsys):
    f = write(tmp_path, "c.json", problem(constant_lcf(2, 1, 1.0), times=[0.25]))
    assert main(["solve", "-f", f, "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert all(abs(r["re_u"] - 1) < 1e-12 for r in rows)


def test_solve_reports_malformed_json(tmp_path, capsys):
    f = write(tmp_path, "bad.json", '{\n  "params": ,\n}')
    assert main(["solve", "-f", f]) == 2
    assert "bad.json:2:13" in capsys.readouterr().err


def test_solve_reports_missing_field(tmp_path, capsys):
    obj = problem(ball_indicator_lcf(2, 1, 0))
    del obj["params"]["alpha"]
    assert main(["solve", "-f", write(tmp_path, "m.json", obj)]) == 2
    assert "params.alpha: missing field" in capsys.readouterr().err


def test_solve_rejects_fast_growth(tmp_path, capsys):
    obj = problem(ball_indicator_lcf(2, 1, 0))
    obj["phi"]["growth_exp"] = 1.5
    assert main(["solve", "-f", write(tmp_path, "g.json", obj)]) == 2
    assert "lambda" in capsys.readouterr().err


def test_simulate_writes_records(tmp_path):
    out = tmp_path / "paths.jsonl"
    summary = tmp_path / "s.json"
    assert main(["simulate", "--p", "2", "--n", "1", "--alpha", "1", "--a", "1", "--dt", "0.5",
                 "--steps", "2", "--paths", "3", "--seed", "7", "--out", str(out),
                 "--summary", str(summary)]) == 0
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(recs) == 9 and {r["path"] for r in recs} == {0, 1, 2}
    assert json.loads(summary.read_text())["clipped_mass"] < 1e-9


def test_simulate_is_reproducible(tmp_path, monkeypatch):
    args = ["simulate", "--p", "3", "--n", "2", "--alpha", "1", "--a", "1", "--dt", "1",
            "--steps", "3", "--paths", "4", "--seed", "11"]
    a, b = tmp_path / "a", tmp_path / "b"
    main(args + ["--out", str(a)])
    monkeypatch.setenv("PADIC_HEAT_THREADS", "3")
    main(args + ["--out", str(b)])
    assert a.read_text() == b.read_text()


def test_simulate_window_too_small(capsys):
    assert main(["simulate", "--p", "2", "--n", "1", "--alpha", "1", "--a", "1", "--dt", "1",
                 "--steps", "1", "--paths", "1", "--seed", "0", "--window", "-4", "4"]) == 1
    assert "WindowTooSmallError" in capsys.readouterr().err


def test_elliptic_check(tmp_path, capsys):
    good = {"p": 3, "n": 2, "d": 2, "monomials": [{"exps": [2, 0], "coeff": 1},
                                                   {"exps": [0, 2], "coeff": -2}]}
    assert main(["elliptic", "check", "-f", write(tmp_path, "g.json", good), "--samples", "200"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "x1^2 - 2*x2^2" and "FAIL" not in out
    bad = {"p": 3, "n": 2, "d": 2, "monomials": [{"exps": [2, 0], "coeff": 1},
                                                  {"exps": [1, 1], "coeff": 1}]}
    assert main(["elliptic", "check", "-f", write(tmp_path, "b.json", bad)]) == 1
    assert "stratum [1] root [0, 1]" in capsys.readouterr().out


def test_elliptic_gen(capsys):
    assert main(["elliptic", "gen", "--p", "3", "--n", "2"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["d"] == 2 and {"exps": [0, 2], "coeff": -2} in obj["monomials"]
    assert main(["elliptic", "gen", "--p", "2", "--n", "2"]) == 1
    assert "ConstructionError" in capsys.readouterr().err
