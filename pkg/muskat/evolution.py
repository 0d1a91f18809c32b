"""
界面演化
组装界面方程右端项（差分形式与分裂形式），RK4 步长加倍自适应推进
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .config.logging_config import log_with_context
from .config.settings import SimConfig, StepControl
from .diagnostics import DiagnosticsRecord, compute_record
from .exceptions import (BlowupSuspected, DomainMismatchError, NonFiniteRhsError,
                         ProfileError)
from .infrastructure.monitoring import InMemoryRunMonitor, RunMonitorProtocol
from .infrastructure.parallel import BoundedExecutor, ordered_row_map
from .interface import DomainSpec, InterfaceProfile, derivative, grid_derivative, grid_points
from .scenarios import build_profile

logger = logging.getLogger(__name__)

TERMINATION_COMPLETED = "completed"
TERMINATION_BLOWUP = "BlowupSuspected"
TERMINATION_NONFINITE = "NonFiniteRhs"
TERMINATION_WALLCLOCK = "WallClock"

_FAC_MIN, _FAC_MAX, _SAFETY = 0.2, 5.0, 0.9


class ContourRhs:
    """界面方程右端项求值器

    每个网格点的积分相互独立，按固定 64 行分块并行；块内用 numpy 沿行归约，
    结果与线程数无关。周期模式用周期化闭式核，渐近模式在 [−2X, 2X] 窗口上求和，
    窗口外被积函数关于 y 为奇函数，对称 PV 尾项为零。
    """

    def __init__(self, domain: DomainSpec, n: int, h_floor_factor: float = 10.0,
                 executor: Optional[BoundedExecutor] = None):
        self.domain = domain
        self.n = n
        self.dx = domain.spacing(n)
        self.h_floor_factor = h_floor_factor
        self.executor = executor
        self.reflect = domain.is_half_plane
        self.floor_nodes_max = 0
        self.evaluations = 0
        if domain.is_periodic:
            x = grid_points(domain, n)
            w = math.pi / domain.period
            y = x[:, None] - x[None, :]
            self._w = w
            self._sin2 = np.sin(2.0 * w * y)
            self._sinsq = 2.0 * np.sin(w * y) ** 2
            self._diag = np.eye(n, dtype=bool)
        else:
            offsets = np.arange(-n, n + 1)
            self._y = offsets * self.dx
            self._idx = (np.arange(n) + n)[:, None] - offsets[None, :]
            self._center = n  # offsets[n] == 0

    @classmethod
    def for_profile(cls, profile: InterfaceProfile, **kwargs) -> "ContourRhs":
        return cls(profile.domain, profile.n, **kwargs)

    # -- 对角（y = 0）极限 ---------------------------------------------------

    def _diagonal(self, f: np.ndarray, fx: np.ndarray, fxx: np.ndarray) -> np.ndarray:
        q = 1.0 + fx * fx
        value = fxx / q
        if self.reflect:
            h_floor = self.h_floor_factor * self.dx * float(np.max(np.abs(fx)))
            low = f <= h_floor
            self.floor_nodes_max = max(self.floor_nodes_max, int(np.count_nonzero(low)))
            value = value + np.where(low, fxx * (fx * fx - 1.0) / (q * q), 0.0)
        return value

    # -- 分块核求和 ------------------------------------------------------------

    def _periodic_rows(self, f, fx, rows: slice) -> np.ndarray:
        w = self._w
        sin2 = self._sin2[rows]
        sinsq = self._sinsq[rows]
        diag = self._diag[rows]
        total = np.zeros(sin2.shape[0])
        for sigma in ((-1.0, 1.0) if self.reflect else (-1.0,)):
            d = f[rows, None] + sigma * f[None, :]
            num = fx[rows, None] + sigma * fx[None, :]
            with np.errstate(over='ignore'):
                den = 2.0 * np.sinh(w * d) ** 2 + sinsq
            kern = w * sin2 / np.where(diag | (den == 0.0), 1.0, den)
            total = total + np.sum(np.where(diag, 0.0, num * kern), axis=1)
        return total

    def _asymptotic_rows(self, f, fx, rows: slice) -> np.ndarray:
        psi_inf = self.domain.psi_inf
        fpad = np.concatenate([np.full(self.n, psi_inf), f, np.full(self.n, psi_inf)])
        fxpad = np.concatenate([np.zeros(self.n), fx, np.zeros(self.n)])
        idx = self._idx[rows]
        y = self._y[None, :]
        fj = fpad[idx]
        fxj = fxpad[idx]
        total = np.zeros(idx.shape[0])
        for sigma in ((-1.0, 1.0) if self.reflect else (-1.0,)):
            d = f[rows, None] + sigma * fj
            num = fx[rows, None] + sigma * fxj
            den = y * y + d * d
            kern = y / np.where(den == 0.0, 1.0, den)
            total = total + np.sum(num * kern, axis=1)
        return total

    def evaluate(self, samples: np.ndarray, t: Optional[float] = None) -> np.ndarray:
        """f_t 在网格上的值；非有限值抛 NonFiniteRhsError（带首个下标）"""
        f = np.asarray(samples, dtype=float)
        if f.size != self.n:
            raise ProfileError(f"expected {self.n} samples, got {f.size}")
        fx = grid_derivative(f, self.domain, 1)
        fxx = grid_derivative(f, self.domain, 2)
        rows_fn = self._periodic_rows if self.domain.is_periodic else self._asymptotic_rows
        with np.errstate(invalid='ignore', divide='ignore'):
            sums = ordered_row_map(lambda rows: rows_fn(f, fx, rows), self.n, self.executor)
            out = (sums + self._diagonal(f, fx, fxx)) * self.dx
        self.evaluations += 1
        bad = np.flatnonzero(~np.isfinite(out))
        if bad.size:
            raise NonFiniteRhsError(int(bad[0]), t)
        return out

    __call__ = evaluate


def rhs_halfplane(profile: InterfaceProfile, h_floor_factor: float = 10.0,
                  executor: Optional[BoundedExecutor] = None) -> np.ndarray:
    """半平面界面方程（差分项 + 反射项）的右端项"""
    if not profile.domain.is_half_plane:
        raise DomainMismatchError("rhs_halfplane requires a HalfPlane domain")
    return ContourRhs.for_profile(profile, h_floor_factor=h_floor_factor, executor=executor)(profile.samples)


def rhs_plane(profile: InterfaceProfile, executor: Optional[BoundedExecutor] = None) -> np.ndarray:
    """全平面界面方程（只有差分项）的右端项"""
    if profile.domain.is_half_plane:
        raise DomainMismatchError("rhs_plane requires a WholePlane domain")
    return ContourRhs.for_profile(profile, executor=executor)(profile.samples)


def rhs_split_form(profile: InterfaceProfile) -> np.ndarray:
    """分裂形式的右端项，仅周期区域；用于在远离底部的数据上交叉验证差分形式

    半平面：π·χ_{f>0} + Σ_± PV∫ [(x−y)f_x − (f(x) ± f(y))]/[(x−y)² + (f(x) ± f(y))²] dy；
    全平面只保留 "−" 项。
    """
    from .kernels import periodized_kernel, periodized_poisson_kernel

    domain = profile.domain
    if not domain.is_periodic:
        raise DomainMismatchError("rhs_split_form is implemented for periodic domains only")
    f = profile.samples
    if domain.is_half_plane and np.any(f <= 0.0):
        raise ProfileError("split form needs f > 0 everywhere (the π·χ term is discontinuous at f = 0)")
    fx = derivative(profile, 1)
    fxx = derivative(profile, 2)
    x = profile.x
    nu = domain.period
    n = profile.n
    c = x[:, None] - x[None, :]
    off = ~np.eye(n, dtype=bool)
    c_safe = np.where(off, c, 0.5 * nu)

    d_minus = f[:, None] - f[None, :]
    minus = fx[:, None] * periodized_kernel(c_safe, d_minus, nu) - periodized_poisson_kernel(c_safe, d_minus, nu)
    minus = np.where(off, minus, 0.0)
    out = np.sum(minus, axis=1) + fxx / (2.0 * (1.0 + fx * fx))
    if domain.is_half_plane:
        d_plus = f[:, None] + f[None, :]
        plus = fx[:, None] * periodized_kernel(c, d_plus, nu) - periodized_poisson_kernel(c, d_plus, nu)
        out = out + np.sum(plus, axis=1)
        return math.pi + out * profile.dx
    return out * profile.dx


# ---------------------------------------------------------------------------
# 时间推进
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimState:
    t: float
    profile: InterfaceProfile
    dt_last: float = 0.0
    step_count: int = 0
    reject_count: int = 0
    clamp_count: int = 0
    clamp_mass: float = 0.0
    dt_next: Optional[float] = None


def _rk4(rhs: Callable, y: np.ndarray, dt: float, k1: Optional[np.ndarray] = None) -> np.ndarray:
    if k1 is None:
        k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _doubling_pair(rhs: Callable, y: np.ndarray, dt: float,
                   k1: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    full = _rk4(rhs, y, dt, k1)
    half = _rk4(rhs, _rk4(rhs, y, 0.5 * dt, k1), 0.5 * dt)
    return full, half


def step_error_estimate(profile: InterfaceProfile, dt: float,
                        rhs: Optional[ContourRhs] = None) -> float:
    """步长加倍误差估计 ‖y_{dt/2,dt/2} − y_dt‖∞ / 15（不带容差缩放）"""
    rhs = rhs or ContourRhs.for_profile(profile)
    y = np.asarray(profile.samples)
    full, half = _doubling_pair(rhs, y, dt, rhs(y))
    return float(np.max(np.abs(half - full)) / 15.0)


def step(state: SimState, control: StepControl, rhs: Optional[ContourRhs] = None,
         monitor: Optional[RunMonitorProtocol] = None,
         t_stop: Optional[float] = None) -> SimState:
    """推进一个被接受的 RK4 步

    误差用步长加倍估计并按 atol + rtol·|y| 缩放；半平面模式下负值不超过 atol
    时夹紧到 0，否则拒绝。控制器步长跌破 dt_min 抛 BlowupSuspected。
    t_stop 给定时步长不越过它，恰好落在 t_stop 上。
    """
    profile = state.profile
    rhs = rhs or ContourRhs.for_profile(profile)
    y = np.asarray(profile.samples)
    k1 = rhs(y, state.t)
    cfl = control.cfl_cap * profile.dx
    dt_ctrl = min(state.dt_next or control.dt_init, control.dt_max, cfl)
    rejects = 0

    while True:
        if dt_ctrl < control.dt_min:
            stuck = replace(state, reject_count=state.reject_count + rejects)
            log_with_context(logger, logging.WARNING, "步长跌破 dt_min，疑似奇性",
                             t=state.t, dt=dt_ctrl, rejects=rejects)
            raise BlowupSuspected(stuck, dt_ctrl)
        capped = t_stop is not None and state.t + dt_ctrl >= t_stop
        dt = (t_stop - state.t) if capped else dt_ctrl

        try:
            with np.errstate(over='ignore', invalid='ignore'):
                full, half = _doubling_pair(rhs, y, dt, k1)
        except (NonFiniteRhsError, FloatingPointError):
            rejects += 1
            if monitor:
                monitor.record_rejection(state.t, dt, "nonfinite")
            dt_ctrl = dt * 0.25
            continue
        if not (np.all(np.isfinite(full)) and np.all(np.isfinite(half))):
            rejects += 1
            if monitor:
                monitor.record_rejection(state.t, dt, "nonfinite")
            dt_ctrl = dt * 0.25
            continue

        scale = control.atol + control.rtol * np.maximum(np.abs(y), np.abs(half))
        err = float(np.max(np.abs(half - full) / 15.0 / scale))
        if err > 1.0:
            rejects += 1
            if monitor:
                monitor.record_rejection(state.t, dt, "error")
            dt_ctrl = dt * max(_FAC_MIN, _SAFETY * err ** -0.2)
            continue

        clamp_count, clamp_mass = 0, 0.0
        if profile.domain.is_half_plane:
            lowest = float(np.min(half))
            if lowest < 0.0:
                if -lowest > control.atol:
                    rejects += 1
                    if monitor:
                        monitor.record_rejection(state.t, dt, "undershoot")
                    dt_ctrl = dt * 0.5
                    continue
                clamped = np.maximum(half, 0.0)
                clamp_count = int(np.count_nonzero(half < 0.0))
                clamp_mass = float(np.sum(clamped - half) * profile.dx)
                half = clamped
        break

    fac = _FAC_MAX if err == 0.0 else min(_FAC_MAX, max(_FAC_MIN, _SAFETY * err ** -0.2))
    dt_next = dt_ctrl if capped and dt < dt_ctrl else dt * fac
    t_new = t_stop if capped else state.t + dt
    if monitor:
        monitor.record_step(t_new, dt)
        if clamp_count:
            monitor.record_clamp(t_new, clamp_count, clamp_mass)
    return SimState(
        t=t_new,
        profile=profile.with_samples(half),
        dt_last=dt,
        step_count=state.step_count + 1,
        reject_count=state.reject_count + rejects,
        clamp_count=state.clamp_count + clamp_count,
        clamp_mass=state.clamp_mass + clamp_mass,
        dt_next=min(dt_next, control.dt_max, cfl),
    )


@dataclass
class RunResult:
    snapshots: List[Tuple[float, InterfaceProfile]]
    records: List[DiagnosticsRecord]
    termination: str
    final_state: SimState
    stats: Dict[str, Any] = field(default_factory=dict)


def run(config: SimConfig, monitor: Optional[RunMonitorProtocol] = None,
        executor: Optional[BoundedExecutor] = None) -> RunResult:
    """从 t = 0 推进到 t_end 或终止事件，按 record_every 输出诊断记录"""
    profile = build_profile(config.scenario, config.n)
    monitor = monitor or InMemoryRunMonitor()
    own_executor = executor is None and config.runtime.workers > 1
    if own_executor:
        executor = BoundedExecutor(max_workers=config.runtime.workers)
    rhs = ContourRhs(profile.domain, profile.n, config.runtime.h_floor_factor, executor)

    gamma = config.gamma_prime
    state = SimState(t=0.0, profile=profile, dt_next=config.control.dt_init)
    records = [compute_record(profile, 0.0, None, gamma, executor)]
    snapshots: List[Tuple[float, InterfaceProfile]] = [(0.0, profile)]
    targets = sorted({s for s in config.snapshot_times if s > 0.0} | {config.t_end})
    snapshot_set = set(config.snapshot_times)

    monitor.start_run(f"{config.scenario.kind.value}-N{config.n}")
    log_with_context(logger, logging.INFO, "开始推进", scenario=config.scenario.kind.value,
                     n=config.n, t_end=config.t_end, workers=config.runtime.workers)

    termination = TERMINATION_COMPLETED
    started = time.monotonic()
    since_record = 0
    try:
        while state.t < config.t_end:
            limit = config.runtime.wall_clock_limit
            if limit is not None and time.monotonic() - started > limit:
                termination = TERMINATION_WALLCLOCK
                break
            target = next(s for s in targets if s > state.t)
            try:
                state = step(state, config.control, rhs, monitor, t_stop=target)
            except BlowupSuspected as e:
                state = e.state
                termination = TERMINATION_BLOWUP
                break
            except NonFiniteRhsError as e:
                log_with_context(logger, logging.ERROR, "右端项出现非有限值", t=state.t, index=e.index)
                termination = TERMINATION_NONFINITE
                break
            since_record += 1
            if state.t in snapshot_set:
                snapshots.append((state.t, state.profile))
            if since_record >= config.record_every:
                records.append(compute_record(state.profile, state.t, records[-1], gamma, executor))
                since_record = 0
                log_with_context(logger, logging.INFO, "诊断记录", t=state.t, dt=state.dt_last,
                                 steps=state.step_count, rejects=state.reject_count,
                                 max_slope=records[-1].max_slope)
        if records[-1].t != state.t:
            records.append(compute_record(state.profile, state.t, records[-1], gamma, executor))
    finally:
        if own_executor:
            executor.shutdown()

    if snapshots[-1][0] != state.t:
        snapshots.append((state.t, state.profile))

    monitor.finish_run(termination, state.t)
    stats = dict(monitor.get_stats())
    stats['h_floor_nodes_max'] = rhs.floor_nodes_max
    stats['rhs_evaluations'] = rhs.evaluations
    return RunResult(snapshots=snapshots, records=records, termination=termination,
                     final_state=state, stats=stats)


__all__ = [
    "TERMINATION_COMPLETED",
    "TERMINATION_BLOWUP",
    "TERMINATION_NONFINITE",
    "TERMINATION_WALLCLOCK",
    "ContourRhs",
    "SimState",
    "RunResult",
    "rhs_halfplane",
    "rhs_plane",
    "rhs_split_form",
    "step",
    "step_error_estimate",
    "run",
]
