"""
运行监控基础设施
统计接受/拒绝步数、夹紧事件与终止原因
"""

import time
import logging
import threading
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Protocol

logger = logging.getLogger(__name__)


class RunStatus(Enum):
    RUNNING = "running"
    FINISHED = "finished"


@dataclass
class RunInfo:
    run_id: str
    status: RunStatus
    start_time: float
    finished_time: Optional[float] = None
    termination: Optional[str] = None
    t_final: Optional[float] = None


class RunMonitorProtocol(Protocol):
    def start_run(self, run_id: str) -> None: ...
    def record_step(self, t: float, dt: float) -> None: ...
    def record_rejection(self, t: float, dt: float, reason: str) -> None: ...
    def record_clamp(self, t: float, count: int, mass: float) -> None: ...
    def finish_run(self, termination: str, t_final: float) -> None: ...
    def get_stats(self) -> Dict[str, Any]: ...


class InMemoryRunMonitor:
    """内存运行监控器"""

    def __init__(self):
        self.stats = defaultdict(int)
        self.clamp_mass = 0.0
        self.dt_min_accepted: Optional[float] = None
        self.dt_max_accepted: Optional[float] = None
        self.rejections_by_reason: Dict[str, int] = defaultdict(int)
        self.run: Optional[RunInfo] = None
        self.lock = threading.RLock()

    def start_run(self, run_id: str) -> None:
        with self.lock:
            self.run = RunInfo(run_id=run_id, status=RunStatus.RUNNING, start_time=time.time())
            self.stats['runs_started'] += 1
        logger.info(f"运行开始: run_id={run_id}")

    def record_step(self, t: float, dt: float) -> None:
        with self.lock:
            self.stats['steps_accepted'] += 1
            if self.dt_min_accepted is None or dt < self.dt_min_accepted:
                self.dt_min_accepted = dt
            if self.dt_max_accepted is None or dt > self.dt_max_accepted:
                self.dt_max_accepted = dt

    def record_rejection(self, t: float, dt: float, reason: str) -> None:
        with self.lock:
            self.stats['steps_rejected'] += 1
            self.rejections_by_reason[reason] += 1
        logger.debug(f"步长被拒: t={t!r}, dt={dt:.3e}, reason={reason}")

    def record_clamp(self, t: float, count: int, mass: float) -> None:
        with self.lock:
            self.stats['clamp_events'] += 1
            self.stats['clamped_samples'] += count
            self.clamp_mass += mass
        logger.info(f"半平面夹紧: t={t!r}, 样本数={count}, 补充质量={mass:.3e}")

    def finish_run(self, termination: str, t_final: float) -> None:
        with self.lock:
            if self.run is None:
                logger.warning("finish_run 调用时没有进行中的运行")
                return
            self.run.status = RunStatus.FINISHED
            self.run.finished_time = time.time()
            self.run.termination = termination
            self.run.t_final = t_final
            duration = self.run.finished_time - self.run.start_time
        logger.info(f"运行结束: termination={termination}, t_final={t_final!r}, duration={duration:.2f}s")

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            return {
                'steps_accepted': self.stats['steps_accepted'],
                'steps_rejected': self.stats['steps_rejected'],
                'clamp_events': self.stats['clamp_events'],
                'clamped_samples': self.stats['clamped_samples'],
                'clamp_mass': self.clamp_mass,
                'dt_min_accepted': self.dt_min_accepted,
                'dt_max_accepted': self.dt_max_accepted,
                'rejections_by_reason': dict(self.rejections_by_reason),
                'termination': self.run.termination if self.run else None,
            }


__all__ = [
    "RunStatus",
    "RunInfo",
    "RunMonitorProtocol",
    "InMemoryRunMonitor",
]
