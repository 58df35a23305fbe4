import csv
import json

import pytest

from varjet.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_INTEGRATION, main

FAST = ["--order", "2", "--samples", "4", "--no-scaling"]


def _jets(tmp_path, *extra):
    out = tmp_path / "bundle.json"
    code = main(["jets", "--builtin", "sir_mu0", *FAST, "-o", str(out), *extra])
    assert code == 0
    return out


def test_jets_then_verify_round_trip(tmp_path, capsys):
    bundle = _jets(tmp_path)
    data = json.loads(bundle.read_text())
    assert data["integrals"] == 2
    assert [j["order"] for j in data["jets"]] == [1, 2]
    capsys.readouterr()
    assert main(["verify", "--bundle", str(bundle)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert any("reproduction" in line for line in lines)


def test_verify_report_file(tmp_path, capsys):
    bundle = _jets(tmp_path)
    report = tmp_path / "report.json"
    assert main(["verify", "--bundle", str(bundle), "-o", str(report)]) == 0
    names = [c["name"] for c in json.loads(report.read_text())]
    assert names[0] == "schema" and "kernel_condition" in names


def test_corrupted_bundle_fails_with_location(tmp_path, capsys):
    bundle = _jets(tmp_path)
    data = json.loads(bundle.read_text())
    data["jets"][1]["coefficients"][2][0][1] += 1e-3
    bundle.write_text(json.dumps(data))
    capsys.readouterr()
    assert main(["verify", "--bundle", str(bundle)]) == EXIT_CHECK_FAILED
    out = capsys.readouterr().out
    fail = [line for line in out.splitlines() if line.startswith("FAIL reproduction")]
    assert fail and "order 2" in fail[0]


def test_schema_violation_is_a_failed_check(tmp_path, capsys):
    bundle = _jets(tmp_path)
    data = json.loads(bundle.read_text())
    del data["jets"]
    bundle.write_text(json.dumps(data))
    assert main(["verify", "--builtin", "sir_mu0", *FAST, "--bundle", str(bundle)]) == EXIT_CHECK_FAILED
    assert "FAIL schema" in capsys.readouterr().out


def test_bundles_are_deterministic_without_timings(tmp_path):
    a = _jets(tmp_path, "--no-timings").read_text()
    b = _jets(tmp_path, "--no-timings").read_text()
    assert a == b


def test_csv_tables(tmp_path):
    _jets(tmp_path, "--csv", str(tmp_path / "tables"))
    with open(tmp_path / "tables" / "order_2.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["t", "integral", "m_2_0_0"]
    assert len(rows[0]) == 2 + 6
    assert len(rows) == 1 + 4 * 2


def test_config_file_and_inline_system(tmp_path, capsys):
    system = tmp_path / "osc.toml"
    system.write_text('variables = ["x", "y"]\nfield = ["y", "-x"]\nz0 = [1.0, 0.0]\n')
    out = tmp_path / "osc.json"
    code = main(["jets", "--system", str(system), "--pivot", "2", "--span", "1", *FAST, "-o", str(out)])
    assert code == 0
    cfg = tmp_path / "run.toml"
    cfg.write_text('[system]\nvariables = ["x", "y"]\nfield = ["y", "-x"]\n'
                   '[run]\nz0 = [1.0, 0.0]\npivot = 2\nspan = 1.0\norder = 2\nsamples = 4\nscaling = false\n')
    assert main(["verify", "--config", str(cfg), "--bundle", str(out)]) == 0


def test_configuration_errors_exit_64(tmp_path, capsys):
    assert main(["jets", "--builtin", "nope"]) == EXIT_CONFIG
    assert main(["jets", "--builtin", "dixon", "--param", "alpha"]) == EXIT_CONFIG
    assert main(["jets", "--builtin", "dixon", "--z0", "1,x"]) == EXIT_CONFIG
    bad = tmp_path / "bad.toml"
    bad.write_text("[run]\norder = 'three'\n")
    assert main(["jets", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["verify", "--bundle", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main(["jets", "--order"])
    assert info.value.code == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_vanishing_pivot_exits_3(tmp_path, capsys):
    system = tmp_path / "osc.toml"
    system.write_text('variables = ["x", "y"]\nfield = ["y", "-x"]\nz0 = [1.0, 0.0]\n')
    code = main(["jets", "--system", str(system), "--pivot", "2", "--span", "3", *FAST,
                 "-o", str(tmp_path / "out.json")])
    assert code == EXIT_INTEGRATION
    assert "X_2" in capsys.readouterr().err


def test_conjecture_reports_json_and_status(tmp_path, capsys):
    out = tmp_path / "conj.json"
    assert main(["conjecture", "--builtin", "dixon", "--order", "4", "-o", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] and report["system"] == "dixon"
    assert report["max_identity_residual"] < 1e-10
    assert capsys.readouterr().err.startswith("PASS")
    assert main(["conjecture", "--builtin", "dixon", "--order", "7"]) == EXIT_CONFIG


def test_list_builtins(capsys):
    assert main(["list-builtins", "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert {d["name"] for d in info} == {"dixon", "sir_gamma0", "sir_mu0", "vanderpol"}
    assert main(["list-builtins"]) == 0
    assert "alpha=3" in capsys.readouterr().out


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.startswith("varjet ")


def test_dixon_defaults_order_three_verify_with_scaling(tmp_path, capsys):
    out = tmp_path / "dixon.json"
    assert main(["jets", "--builtin", "dixon", "--param", "alpha=3", "--order", "3", "-o", str(out)]) == 0
    assert len(json.loads(out.read_text())["jets"]) == 3
    capsys.readouterr()
    assert main(["verify", "--bundle", str(out)]) == 0
    out_lines = capsys.readouterr().out
    assert "PASS constancy_scaling" in out_lines and "PASS reference_jets" in out_lines
