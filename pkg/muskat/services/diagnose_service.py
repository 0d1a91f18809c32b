"""
诊断服务层
重新读取已完成运行的 CSV 与快照，重算全部检查并给出结论
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..diagnostics import (STATUS_FAIL, STATUS_PASS, CheckReport, DiagnosticsRecord,
                           check_energy_inequality, check_ln_dissipation_identity, check_mass,
                           check_monotone, singularity_time_bound)
from ..exceptions import OutputError
from ..infrastructure.run_store import RunStore
from ..interface import PlaneKind

logger = logging.getLogger(__name__)

_DEFAULT_TOLERANCES = {"mass_tol": 1e-6, "slope_tol": 1e-6, "energy_tol": 1e-6, "energy_slack": 0.1}


@dataclass
class DiagnoseOutcome:
    run_dir: Path
    checks: List[CheckReport]
    singularity_time_bound: Optional[float]

    @property
    def passed(self) -> bool:
        """所有适用的检查都通过"""
        return all(c.passed for c in self.checks if c.applicable)


def check_singularity_bound(bound: Optional[float], records: List[DiagnosticsRecord],
                            termination: Optional[str]) -> CheckReport:
    """观察到的终止时间不应超过理论上界（只检查一致性，不检查紧度）"""
    name = "singularity_time_bound"
    if bound is None:
        return CheckReport.not_applicable(name, "initial data is not a touching periodic half-plane profile "
                                                "with L/ν² ∈ (0, 3/40) and slope ≤ 3/10")
    t_final = records[-1].t if records else 0.0
    status = STATUS_PASS if t_final < bound else STATUS_FAIL
    return CheckReport(check=name, params={"termination": termination}, value=t_final, bound=bound,
                       status=status)


class DiagnoseServiceInterface(ABC):
    """诊断服务抽象接口"""

    @abstractmethod
    def diagnose(self, run_dir: str) -> DiagnoseOutcome:
        """重算一次运行的全部检查"""
        pass


class DiagnoseService(DiagnoseServiceInterface):
    """诊断服务实现"""

    def diagnose(self, run_dir: str) -> DiagnoseOutcome:
        store = RunStore(run_dir)
        logger.info("=== 诊断开始 ===")
        logger.info(f"运行目录: {run_dir}")
        if not store.csv_path.exists():
            raise OutputError(str(store.csv_path), "diagnostics file not found")

        records = store.load_records()
        logger.info(f"读取诊断记录: {len(records)} 行")
        summary: Dict[str, Any] = store.read_summary() if store.summary_path.exists() else {}
        tolerances = dict(_DEFAULT_TOLERANCES)
        tolerances.update(summary.get("diagnostics_settings") or {})

        initial = None
        if store.snapshot_path(0).exists():
            _, initial = store.load_snapshot(0)
        if initial is not None:
            plane = initial.domain.plane_kind
        else:
            plane = PlaneKind(summary.get("plane", PlaneKind.HALF.value))

        checks = [
            check_monotone(records, "max_slope", tolerances["slope_tol"], plane),
            check_monotone(records, "l2_energy", tolerances["energy_tol"], plane),
            check_mass(records, tolerances["mass_tol"], summary.get("clamp_mass") or 0.0),
            check_energy_inequality(records, tolerances["energy_tol"], tolerances["energy_slack"]),
            check_ln_dissipation_identity(records),
        ]
        bound = singularity_time_bound(initial) if initial is not None else None
        checks.append(check_singularity_bound(bound, records, summary.get("termination")))

        for c in checks:
            logger.info(f"检查 {c.check}: {c.status}")
        failed = [c.check for c in checks if c.applicable and not c.passed]
        if failed:
            logger.warning(f"=== 诊断未通过: {failed} ===")
        else:
            logger.info("=== 诊断通过 ===")
        return DiagnoseOutcome(run_dir=Path(run_dir), checks=checks, singularity_time_bound=bound)
