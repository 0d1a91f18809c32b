import importlib
import json
from pathlib import Path

import pytest

from muskat.cli import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, build_parser, main


@pytest.fixture
def constant_run(tmp_path, write_config, constant_config_text):
    out = tmp_path / "run"
    code = main(["simulate", "--config", write_config(constant_config_text), "--out", str(out), "--quiet"])
    return code, out


def test_simulate_constant_writes_artifacts(constant_run):
    code, out = constant_run
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["termination"] == "completed"
    assert summary["t_final"] == 0.05
    assert summary["schema_version"] == 1
    assert summary["singularity_time_bound"] is None
    assert (out / "diagnostics.csv").exists()
    assert sorted(p.name for p in (out / "snapshots").iterdir()) == ["0000.json", "0001.json", "0002.json"]


def test_diagnose_constant_run_passes(constant_run, capsys):
    _, out = constant_run
    capsys.readouterr()
    assert main(["diagnose", "--run", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "VERDICT: PASS" in printed
    assert "mass_conservation" in printed


def test_diagnose_truncated_csv_is_an_error(constant_run, capsys):
    _, out = constant_run
    csv = out / "diagnostics.csv"
    lines = csv.read_text(encoding="utf-8").splitlines()
    lines[2] = lines[2].split(",")[0]
    csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main(["diagnose", "--run", str(out)]) == EXIT_ERROR
    assert "row 3" in capsys.readouterr().err


def test_diagnose_missing_run_is_an_error(tmp_path):
    assert main(["diagnose", "--run", str(tmp_path / "nowhere")]) == EXIT_ERROR


def test_simulate_into_a_file_fails_before_running(tmp_path, write_config, constant_config_text):
    blocker = tmp_path / "blocker"
    blocker.write_text("x", encoding="utf-8")
    out = blocker / "run"
    code = main(["simulate", "--config", write_config(constant_config_text), "--out", str(out), "--quiet"])
    assert code == EXIT_ERROR
    assert not (out / "diagnostics.csv").exists()


def test_simulate_invalid_config_lists_violations(tmp_path, write_config, capsys):
    text = "[scenario]\nkind = periodic_touching_bump\nepsilon = 0.5\nnu = 1.0\n[grid]\nn = 30\n"
    code = main(["simulate", "--config", write_config(text), "--out", str(tmp_path / "r"), "--quiet"])
    assert code == EXIT_ERROR
    err = capsys.readouterr().err
    assert "3/10" in err and "t_end" in err


def test_verify_rejects_a_above_three_tenths(capsys):
    assert main(["verify", "--a", "0.5"]) == EXIT_ERROR
    assert "3/10" in capsys.readouterr().err


def test_verify_kernel_suite_passes_and_writes_json(tmp_path):
    report = tmp_path / "verify.json"
    assert main(["verify", "--suite", "kernels", "--a", "0.3", "--json", str(report)]) == EXIT_OK
    entries = json.loads(report.read_text(encoding="utf-8"))
    checks = {e["check"] for e in entries}
    assert {"h_vanishes_on_ray", "h_nonnegative", "lambda_ordering", "periodized_kernels"} <= checks
    assert all(e["pass"] for e in entries)


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR}) == 3


def test_console_script_points_at_main():
    tomllib = pytest.importorskip("tomllib")
    pyproject = Path(__file__).resolve().parents[1] / "pyproject.toml"
    with pyproject.open("rb") as fh:
        target = tomllib.load(fh)["project"]["scripts"]["muskat"]
    module_name, func_name = target.split(":")
    assert getattr(importlib.import_module(module_name), func_name) is main
