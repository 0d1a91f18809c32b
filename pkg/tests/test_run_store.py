import json

import pytest

from muskat.diagnostics import DIAGNOSTICS_COLUMNS, DiagnosticsRecord
from muskat.exceptions import DiagnosticsFormatError
from muskat.infrastructure.run_store import SCHEMA_VERSION, RunStore, load_records


def make_records():
    return [
        DiagnosticsRecord(t=0.0, max_slope=0.27, l1_mass=0.043, l2_energy=0.0028,
                          lambda_dissipation=0.011, ln_dissipation=None, min_height=0.0,
                          holder_fxx=3.5, blowup_accumulator=0.0),
        DiagnosticsRecord(t=0.1 / 3, max_slope=0.25, l1_mass=0.043, l2_energy=0.0027,
                          lambda_dissipation=0.010, ln_dissipation=None, min_height=0.0,
                          holder_fxx=3.1, blowup_accumulator=1.7),
    ]


def test_records_round_trip_exactly(tmp_path):
    store = RunStore(str(tmp_path))
    records = make_records()
    store.write_records(records)
    assert store.load_records() == records


def test_csv_header_and_empty_optional_columns(tmp_path):
    store = RunStore(str(tmp_path))
    store.write_records(make_records())
    lines = store.csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(DIAGNOSTICS_COLUMNS)
    assert lines[1].split(",")[5] == ""


def test_truncated_row_reports_line_number(tmp_path):
    store = RunStore(str(tmp_path))
    store.write_records(make_records())
    lines = store.csv_path.read_text(encoding="utf-8").splitlines()
    lines[2] = ",".join(lines[2].split(",")[:3])
    store.csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(DiagnosticsFormatError) as err:
        load_records(str(store.csv_path))
    assert err.value.row == 3


def test_extra_field_reports_line_number(tmp_path):
    path = tmp_path / "diagnostics.csv"
    row = ",".join(["0"] * len(DIAGNOSTICS_COLUMNS))
    path.write_text("\n".join([",".join(DIAGNOSTICS_COLUMNS), row, row + ",7"]) + "\n", encoding="utf-8")
    with pytest.raises(DiagnosticsFormatError) as err:
        load_records(str(path))
    assert err.value.row == 3


def test_non_numeric_value_reports_line_number(tmp_path):
    path = tmp_path / "diagnostics.csv"
    row = ["0"] * len(DIAGNOSTICS_COLUMNS)
    row[2] = "heavy"
    path.write_text(",".join(DIAGNOSTICS_COLUMNS) + "\n" + ",".join(row) + "\n", encoding="utf-8")
    with pytest.raises(DiagnosticsFormatError, match="row 2") as err:
        load_records(str(path))
    assert "l1_mass" in str(err.value)


def test_header_mismatch_is_row_one(tmp_path):
    path = tmp_path / "diagnostics.csv"
    path.write_text("t,slope\n0,0\n", encoding="utf-8")
    with pytest.raises(DiagnosticsFormatError) as err:
        load_records(str(path))
    assert err.value.row == 1


def test_empty_file_is_row_one(tmp_path):
    path = tmp_path / "diagnostics.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(DiagnosticsFormatError) as err:
        load_records(str(path))
    assert err.value.row == 1


def test_summary_has_schema_version_and_nulls_nan(tmp_path):
    store = RunStore(str(tmp_path))
    store.write_summary({"termination": "completed", "singularity_time_bound": float("nan")})
    data = json.loads(store.summary_path.read_text(encoding="utf-8"))
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["singularity_time_bound"] is None
    assert store.read_summary() == data


def test_snapshots_are_numbered(tmp_path, touching_bump):
    store = RunStore(str(tmp_path))
    paths = store.write_snapshots([(0.0, touching_bump), (0.5, touching_bump)])
    assert [p.name for p in paths] == ["0000.json", "0001.json"]
    t, restored = store.load_snapshot(1)
    assert t == 0.5
    assert (restored.samples == touching_bump.samples).all()


def test_verify_report_to_custom_path(tmp_path):
    target = tmp_path / "out" / "report.json"
    RunStore(str(tmp_path)).write_verify_report([{"check": "x", "value": float("inf")}], str(target))
    assert json.loads(target.read_text(encoding="utf-8")) == [{"check": "x", "value": None}]


def test_no_temporary_files_left(tmp_path):
    store = RunStore(str(tmp_path))
    store.write_records(make_records())
    store.write_summary({"termination": "completed"})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["diagnostics.csv", "summary.json"]
