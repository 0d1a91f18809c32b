"""
运行产物存储
诊断 CSV、快照 JSON、summary.json 与 verify-report.json 的读写
"""

import json
import logging
import math
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from ..diagnostics import DIAGNOSTICS_COLUMNS, OPTIONAL_COLUMNS, DiagnosticsRecord
from ..exceptions import DiagnosticsFormatError
from ..interface import InterfaceProfile, from_snapshot, to_snapshot

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_NAME = "diagnostics.csv"
SUMMARY_NAME = "summary.json"
VERIFY_REPORT_NAME = "verify-report.json"
SNAPSHOT_DIR = "snapshots"

_LINE_RE = re.compile(r"line (\d+)")


def _atomic_write(path: Path, write) -> None:
    """写入同目录下的临时文件后改名，失败时不留下半成品"""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, payload: Any) -> None:
    _atomic_write(path, lambda fh: json.dump(payload, fh, indent=2, ensure_ascii=False, allow_nan=False))


def _finite_or_none(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class RunStore:
    """一次运行的输出目录"""

    def __init__(self, run_dir: str):
        self.run_dir = Path(run_dir)

    @property
    def csv_path(self) -> Path:
        return self.run_dir / CSV_NAME

    @property
    def summary_path(self) -> Path:
        return self.run_dir / SUMMARY_NAME

    @property
    def verify_report_path(self) -> Path:
        return self.run_dir / VERIFY_REPORT_NAME

    def snapshot_path(self, index: int) -> Path:
        return self.run_dir / SNAPSHOT_DIR / f"{index:04d}.json"

    # -- 诊断 CSV -------------------------------------------------------------

    def write_records(self, records: Sequence[DiagnosticsRecord]) -> Path:
        df = pd.DataFrame([r.to_row() for r in records], columns=list(DIAGNOSTICS_COLUMNS))
        _atomic_write(self.csv_path,
                      lambda fh: df.to_csv(fh, index=False, float_format="%.17g", na_rep=""))
        logger.info(f"诊断记录已写出: path={self.csv_path}, rows={len(records)}")
        return self.csv_path

    def load_records(self, path: Optional[str] = None) -> List[DiagnosticsRecord]:
        return load_records(path or str(self.csv_path))

    # -- 快照 -----------------------------------------------------------------

    def write_snapshots(self, snapshots: Iterable[Tuple[float, InterfaceProfile]]) -> List[Path]:
        paths = []
        for index, (t, profile) in enumerate(snapshots):
            path = self.snapshot_path(index)
            _write_json(path, to_snapshot(profile, t))
            paths.append(path)
        logger.info(f"快照已写出: dir={self.run_dir / SNAPSHOT_DIR}, count={len(paths)}")
        return paths

    def load_snapshot(self, index: int) -> Tuple[float, InterfaceProfile]:
        with open(self.snapshot_path(index), "r", encoding="utf-8") as fh:
            return from_snapshot(json.load(fh))

    # -- JSON 报告 ------------------------------------------------------------

    def write_summary(self, summary: Mapping[str, Any]) -> Path:
        payload = {"schema_version": SCHEMA_VERSION}
        payload.update({k: _finite_or_none(v) for k, v in summary.items()})
        _write_json(self.summary_path, payload)
        return self.summary_path

    def read_summary(self) -> Dict[str, Any]:
        with open(self.summary_path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def write_verify_report(self, entries: Sequence[Mapping[str, Any]], path: Optional[str] = None) -> Path:
        target = Path(path) if path else self.verify_report_path
        _write_json(target, [{k: _finite_or_none(v) for k, v in e.items()} for e in entries])
        return target


def load_records(path: str) -> List[DiagnosticsRecord]:
    """读回诊断 CSV；缺字段或非数值的行抛 DiagnosticsFormatError（行号含表头，从 1 开始）"""
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        match = _LINE_RE.search(str(e))
        raise DiagnosticsFormatError(int(match.group(1)) if match else 0, str(e)) from e
    except pd.errors.EmptyDataError as e:
        raise DiagnosticsFormatError(1, "empty diagnostics file") from e

    header = tuple(df.columns)
    if header != DIAGNOSTICS_COLUMNS:
        raise DiagnosticsFormatError(1, f"unexpected header {','.join(header)}")

    records = []
    for offset, row in enumerate(df.itertuples(index=False, name=None)):
        line = offset + 2
        parsed: Dict[str, Optional[float]] = {}
        for name, raw in zip(DIAGNOSTICS_COLUMNS, row):
            text = "" if raw is None or (isinstance(raw, float) and math.isnan(raw)) else str(raw).strip()
            if text == "":
                if name in OPTIONAL_COLUMNS:
                    parsed[name] = None
                    continue
                raise DiagnosticsFormatError(line, f"missing value for '{name}'")
            try:
                parsed[name] = float(text)
            except ValueError:
                raise DiagnosticsFormatError(line, f"non-numeric value {text!r} for '{name}'") from None
        records.append(DiagnosticsRecord(**parsed))
    return records


__all__ = [
    "SCHEMA_VERSION",
    "CSV_NAME",
    "SUMMARY_NAME",
    "VERIFY_REPORT_NAME",
    "RunStore",
    "load_records",
]
