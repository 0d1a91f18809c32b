"""
模拟服务层
推进一次运行并把诊断记录、快照和 summary.json 写入运行目录
"""

import logging
import os
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from ..config.settings import SimConfig
from ..diagnostics import CheckReport, check_mass, check_monotone, singularity_time_bound
from ..evolution import RunResult, run
from ..exceptions import OutputError
from ..infrastructure.monitoring import InMemoryRunMonitor, RunMonitorProtocol
from ..infrastructure.parallel import BoundedExecutor
from ..infrastructure.run_store import RunStore
from ..interface import sup_norm

logger = logging.getLogger(__name__)


@dataclass
class SimulationOutcome:
    run_dir: Path
    result: RunResult
    summary: Dict[str, Any]
    checks: List[CheckReport]


def default_output_dir(config: SimConfig) -> str:
    return os.path.join("runs", f"{config.scenario.kind.value}-N{config.n}")


def ensure_writable(run_dir: Path) -> None:
    """推进前先确认输出目录可写，避免算完才失败"""
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        fd, scratch = tempfile.mkstemp(prefix=".writable.", dir=str(run_dir))
        os.close(fd)
        os.unlink(scratch)
    except OSError as e:
        raise OutputError(str(run_dir), f"output directory is not writable ({e})") from e


def build_summary(config: SimConfig, result: RunResult, slope_check: CheckReport,
                  mass_check: CheckReport, bound: Optional[float]) -> Dict[str, Any]:
    stats = result.stats
    records = result.records
    if slope_check.applicable:
        slope_monotone: Optional[bool] = slope_check.passed
    else:
        slope_monotone = None
    return {
        "termination": result.termination,
        "t_final": result.final_state.t,
        "records_count": len(records),
        "max_slope_monotone": slope_monotone,
        "mass_drift": mass_check.value,
        "blowup_accumulator_final": records[-1].blowup_accumulator,
        "sup_norm_initial": sup_norm(result.snapshots[0][1]),
        "sup_norm_final": sup_norm(result.final_state.profile),
        "steps_accepted": stats.get("steps_accepted", 0),
        "steps_rejected": stats.get("steps_rejected", 0),
        "rejections_by_reason": stats.get("rejections_by_reason", {}),
        "clamp_events": stats.get("clamp_events", 0),
        "clamp_mass": stats.get("clamp_mass", 0.0),
        "dt_min_accepted": stats.get("dt_min_accepted"),
        "dt_max_accepted": stats.get("dt_max_accepted"),
        "h_floor_nodes_max": stats.get("h_floor_nodes_max", 0),
        "singularity_time_bound": bound,
        "scenario": config.scenario.kind.value,
        "plane": config.domain.plane_kind.value,
        "n": config.n,
        "t_end": config.t_end,
        "diagnostics_settings": {
            "mass_tol": config.diagnostics.mass_tol,
            "slope_tol": config.diagnostics.slope_tol,
            "energy_tol": config.diagnostics.energy_tol,
            "energy_slack": config.diagnostics.energy_slack,
        },
    }


class SimulationServiceInterface(ABC):
    """模拟服务抽象接口"""

    @abstractmethod
    def simulate(self, config: SimConfig, out_dir: Optional[str] = None) -> SimulationOutcome:
        """运行一次模拟并写出全部产物"""
        pass


class SimulationService(SimulationServiceInterface):
    """模拟服务实现"""

    def __init__(self, monitor_factory: Callable[[], RunMonitorProtocol] = InMemoryRunMonitor):
        self.monitor_factory = monitor_factory

    def simulate(self, config: SimConfig, out_dir: Optional[str] = None) -> SimulationOutcome:
        run_dir = Path(out_dir or config.output_dir or default_output_dir(config))
        logger.info("=== 模拟开始 ===")
        logger.info(f"场景: {config.scenario.kind.value}, N={config.n}, t_end={config.t_end}, "
                    f"workers={config.runtime.workers}")
        logger.info(f"输出目录: {run_dir}")
        ensure_writable(run_dir)

        monitor = self.monitor_factory()
        workers = config.runtime.workers
        if workers > 1:
            with BoundedExecutor(max_workers=workers) as executor:
                result = run(config, monitor, executor)
        else:
            result = run(config, monitor)

        plane = config.domain.plane_kind
        slope_check = check_monotone(result.records, "max_slope", config.diagnostics.slope_tol, plane)
        mass_check = check_mass(result.records, config.diagnostics.mass_tol,
                                result.final_state.clamp_mass)
        bound = singularity_time_bound(result.snapshots[0][1])
        summary = build_summary(config, result, slope_check, mass_check, bound)

        store = RunStore(str(run_dir))
        try:
            store.write_snapshots(result.snapshots)
            store.write_records(result.records)
            store.write_summary(summary)
        except OSError as e:
            raise OutputError(str(run_dir), f"failed to write run output ({e})") from e

        logger.info("=== 模拟结束 ===")
        logger.info(f"终止原因: {result.termination}, t_final={result.final_state.t!r}, "
                    f"记录数={len(result.records)}")
        if bound is not None:
            logger.info(f"奇性时间上界: {bound:.6g}")
        return SimulationOutcome(run_dir=run_dir, result=result, summary=summary,
                                 checks=[slope_check, mass_check])
