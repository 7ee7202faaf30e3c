import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypadams import cli
from hypadams.cli import UsageError, main, parse_betas, parse_eps, parse_range


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_green_table_has_requested_rows(tmp_path, capsys):
    path = tmp_path / "g.csv"
    code, _, _ = _run(capsys, "kernel", "--kind", "green", "--rho", "0.1:10:100", "--out", str(path))
    assert code == 0
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["rho", "value", "err_estimate"]
    assert len(rows) == 101
    # 17 significant digits round-trip exactly
    assert float(rows[1][0]) == 0.1


def test_heat_table_reports_mass(capsys):
    code, out, _ = _run(capsys, "kernel", "--kind", "heat", "--t", "0.5", "--rho", "0:3:4")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert len(rows) == 4
    assert float(rows[0]["mass"]) == pytest.approx(1.0, rel=1e-5)


def test_half_power_below_critical_is_rejected(capsys):
    code, _, err = _run(capsys, "kernel", "--kind", "half_power", "--alpha", "-3")
    assert code == 1
    assert "alpha" in err


def test_unknown_target_prints_usage(capsys):
    code, _, err = _run(capsys, "verify", "--target", "9.9")
    assert code == 1
    assert err.startswith("usage:")


def test_missing_command(capsys):
    code, _, err = _run(capsys)
    assert code == 1 and "usage:" in err


def test_numeric_failure_exit_code(capsys):
    code, _, err = _run(capsys, "kernel", "--kind", "green", "--rho", "1", "--rel-tol", "1e-16",
                        "--max-depth", "1")
    assert code == 2
    assert "numerical failure" in err


def test_verify_green_bound_passes(capsys):
    code, out, _ = _run(capsys, "verify", "--target", "3.1")
    assert code == 0
    rep = json.loads(out)
    assert rep["pass"] and rep["reports"][0]["name"] == "lemma3.1"
    assert len(rep["reports"][0]["rows"]) == 200


def test_verify_csv_format(capsys):
    code, out, _ = _run(capsys, "verify", "--target", "3.4", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["check", "x", "lhs", "rhs", "margin", "pass"]
    assert {r[0] for r in rows[1:]} == {"lemma3.4[alpha=1]", "lemma3.4.late[alpha=1]"}


def test_verify_plancherel(capsys):
    code, out, _ = _run(capsys, "verify", "--target", "plancherel", "--t", "0.5")
    assert code == 0
    rep = json.loads(out)
    tr = next(r for r in rep["reports"] if r["name"] == "plancherel.transform")
    assert tr["extras"]["max_relative_error"] < 1e-4


def test_theorem_bounded_at_critical_beta(capsys):
    code, out, _ = _run(capsys, "theorem", "--id", "1.6", "--alpha", "1", "--beta", "315.827",
                        "--family", "adams", "--eps", "1e-1:1e-4")
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "BOUNDED"
    assert rep["expectation_met"]


def test_theorem_growing_above_critical_beta(capsys):
    code, out, _ = _run(capsys, "theorem", "--id", "1.6", "--beta", "379", "--eps", "1e-1:1e-4")
    assert code == 0
    assert json.loads(out)["verdict"] == "GROWING"


def test_theorem_expectation_mismatch(capsys):
    code, out, _ = _run(capsys, "theorem", "--beta", "315.827", "--expect", "GROWING")
    assert code == 3
    assert not json.loads(out)["expectation_met"]


def test_theorem_boundary_weighted_reports_chain(capsys):
    code, out, _ = _run(capsys, "theorem", "--id", "1.9")
    assert code == 0
    fc = json.loads(out)["fitted_constants"]
    assert {"C1_empirical_dx", "C7_empirical", "chain_bound", "chain_ok"} <= set(fc)
    assert fc["chain_ok"]


def test_print_config_round_trip(tmp_path, capsys):
    code, text, _ = _run(capsys, "--print-config")
    assert code == 0
    path = tmp_path / "cfg.toml"
    path.write_text(text)
    code, again, _ = _run(capsys, "--config", str(path), "--print-config")
    assert code == 0 and again == text


def test_flags_override_config(tmp_path, capsys):
    path = tmp_path / "cfg.toml"
    path.write_text('[kernel]\nkind = "heat"\nt = 2.0\n')
    code, text, _ = _run(capsys, "--config", str(path), "--print-config", "kernel", "--t", "3.0")
    assert code == 0
    assert 'kind = "heat"' in text and "t = 3.0" in text


def test_config_rejects_unknown_keys(tmp_path, capsys):
    path = tmp_path / "cfg.toml"
    path.write_text("[kernel]\ncolour = 1\n")
    assert _run(capsys, "--config", str(path), "--print-config")[0] == 1
    path.write_text("[plot]\nx = 1\n")
    assert _run(capsys, "--config", str(path), "--print-config")[0] == 1
    path.write_text("[kernel\n")
    assert _run(capsys, "--config", str(path), "--print-config")[0] == 1


def test_tolerances_must_be_positive(capsys):
    assert _run(capsys, "kernel", "--rel-tol", "0")[0] == 1


def test_parse_range_forms():
    assert np.allclose(parse_range("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
    assert np.allclose(parse_range("1:100:3L"), [1, 10, 100])
    assert np.allclose(parse_range("2.5"), [2.5])
    for bad in ("1:2", "a:b:3", "1:2:0", "0:1:3L", "1:2:3:4"):
        with pytest.raises(UsageError):
            parse_range(bad)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.integers(1, 500), st.booleans())
def test_parse_range_properties(a, b, n, log):
    grid = parse_range(f"{a!r}:{b!r}:{n}{'L' if log else ''}")
    assert len(grid) == n
    assert grid[0] == pytest.approx(a, rel=1e-12)
    if n > 1:
        assert grid[-1] == pytest.approx(b, rel=1e-12)


def test_parse_eps_and_betas():
    assert parse_eps("1e-1:1e-4") == (1e-4, 1e-1)
    assert parse_eps("") is None
    with pytest.raises(UsageError):
        parse_eps("0:0.1")
    assert parse_betas("1,2.5") == [1.0, 2.5]
    assert parse_betas(3) == [3.0]
    assert parse_betas("1:3:3") == [1.0, 2.0, 3.0]
    with pytest.raises(UsageError):
        parse_betas("x")


def test_threads_do_not_change_output(monkeypatch, capsys):
    outs = []
    for n in ("1", "3"):
        monkeypatch.setenv("HYPADAMS_THREADS", n)
        outs.append(_run(capsys, "kernel", "--kind", "green", "--rho", "0.5:5:7")[1])
    assert outs[0] == outs[1]


def test_reports_are_byte_stable(tmp_path, capsys):
    texts = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert _run(capsys, "theorem", "--id", "1.8", "--out", str(path))[0] == 0
        texts.append(path.read_bytes())
    assert texts[0] == texts[1]


def test_json_is_plain():
    text = cli.to_json({"a": np.float64(1.5), "b": np.array([1, 2]), "c": np.bool_(True), "d": math.inf})
    assert json.loads(text) == {"a": 1.5, "b": [1, 2], "c": True, "d": math.inf}
