"""
轨迹诊断
质量、能量、λ/ln 耗散、Hölder 爆破泛函，以及沿记录序列的单调性/能量不等式检查
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import polygamma

from .exceptions import DomainMismatchError
from .infrastructure.parallel import BoundedExecutor, ordered_row_map, ordered_sum
from .interface import (InterfaceProfile, PlaneKind, derivative, holder_seminorm_fxx,
                        l1_mass, l2_energy, max_slope, min_height)
from .kernels import lambda_rate, log_kernel_tail, tilde_lambda_rate
from .scenarios import HALF_PLANE_SLOPE_BOUND, PLANE_SLOPE_BOUND

logger = logging.getLogger(__name__)

DIAGNOSTICS_COLUMNS = (
    "t", "max_slope", "l1_mass", "l2_energy", "lambda_dissipation",
    "ln_dissipation", "min_height", "holder_fxx", "blowup_accumulator",
)
OPTIONAL_COLUMNS = frozenset({"lambda_dissipation", "ln_dissipation"})

DEFAULT_IMAGES = 8
SINGULARITY_MASS_BOUND = 3.0 / 40.0

STATUS_PASS = "PASS"
STATUS_FAIL = "FAIL"
STATUS_NOT_APPLICABLE = "not applicable"


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    max_slope: float
    l1_mass: float
    l2_energy: float
    lambda_dissipation: Optional[float]
    ln_dissipation: Optional[float]
    min_height: float
    holder_fxx: float
    blowup_accumulator: float

    def to_row(self) -> Dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in DIAGNOSTICS_COLUMNS}

    @classmethod
    def from_row(cls, row: Dict[str, Any]) -> "DiagnosticsRecord":
        return cls(**{name: (None if row.get(name) is None else float(row[name]))
                      for name in DIAGNOSTICS_COLUMNS})


@dataclass
class CheckReport:
    """一项检查的结果；status 为 PASS / FAIL / not applicable"""
    check: str
    params: Dict[str, Any] = field(default_factory=dict)
    value: Optional[float] = None
    bound: Optional[float] = None
    status: str = STATUS_PASS
    detail: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == STATUS_PASS

    @property
    def applicable(self) -> bool:
        return self.status != STATUS_NOT_APPLICABLE

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["pass"] = self.passed
        return out

    @classmethod
    def not_applicable(cls, check: str, reason: str, **params) -> "CheckReport":
        return cls(check=check, params=params, status=STATUS_NOT_APPLICABLE,
                   detail={"reason": reason})


# ---------------------------------------------------------------------------
# 双重求和
# ---------------------------------------------------------------------------

def _trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def _image_offsets(nu: float, images: int) -> np.ndarray:
    return np.arange(-images, images + 1) * nu


def _rate_diagonal(profile: InterfaceProfile, diag_coeff: float) -> np.ndarray:
    """x = y 处的极限 diag_coeff·f_x²/(1 + f_x²)；f = 0 处极限为 0"""
    fx = derivative(profile, 1)
    return np.where(profile.samples > 0.0, diag_coeff * fx * fx / (1.0 + fx * fx), 0.0)


def _periodic_rate_sum(profile: InterfaceProfile, rate: Callable, tail_coeff: float,
                       diag_coeff: float, images: int,
                       executor: Optional[BoundedExecutor]) -> float:
    """Σ_i Σ_j Σ_{|n|≤K} rate(f_i, f_j, x_i − x_j + nν)·dx² 加上 |n| > K 的 c⁻⁴ 尾项"""
    f = profile.samples
    diag = _rate_diagonal(profile, diag_coeff)
    x = profile.x
    nu = profile.domain.period
    shifts = _image_offsets(nu, images)
    # Σ_{|n|>K} (nν)⁻⁴ ≈ 2·ψ⁽³⁾(K+1)/(6ν⁴)
    tail = tail_coeff * 2.0 * float(polygamma(3, images + 1)) / (6.0 * nu ** 4)

    def rows_fn(rows: slice) -> np.ndarray:
        c = (x[rows, None] - x[None, :])[:, :, None] + shifts[None, None, :]
        vals = rate(f[rows, None, None], f[None, :, None], c)
        far = (f[rows, None] ** 2 - f[None, :] ** 2) ** 2 * tail
        # 中心像的对角元 rate 为 0/0，补上极限值
        return np.sum(vals, axis=(1, 2)) + np.sum(far, axis=1) + diag[rows]

    return ordered_sum(rows_fn, profile.n, executor) * profile.dx ** 2


def _asymptotic_rate_sum(profile: InterfaceProfile, rate: Callable, diag_coeff: float,
                         executor: Optional[BoundedExecutor]) -> float:
    """网格内梯形双重求和，加上一点在网格外（f ≡ ψ∞）的点对（自适应积分）"""
    f = profile.samples
    x = profile.x
    dx = profile.dx
    psi_inf = profile.domain.psi_inf
    w = _trapezoid_weights(profile.n)

    def rows_fn(rows: slice) -> np.ndarray:
        vals = rate(f[rows, None], f[None, :], x[rows, None] - x[None, :])
        return np.sum(vals * w[None, :], axis=1)

    rows_total = ordered_row_map(rows_fn, profile.n, executor)
    rows_total = rows_total + w * _rate_diagonal(profile, diag_coeff)
    inner = float(np.sum(w * rows_total)) * dx * dx

    to_right = x[-1] - x
    to_left = x - x[0]

    def outside(s: float) -> np.ndarray:
        return rate(f, psi_inf, to_right + s) + rate(f, psi_inf, to_left + s)

    tails, err = quad_vec(outside, 0.0, np.inf, epsabs=1e-13, epsrel=1e-9)
    logger.debug(f"网格外积分误差估计: {err:.3e}")
    return inner + 2.0 * float(np.sum(w * tails)) * dx


def _require_half_plane(profile: InterfaceProfile, name: str) -> None:
    if not profile.domain.is_half_plane:
        raise DomainMismatchError(f"{name} is defined for HalfPlane domains only")


def lambda_dissipation(profile: InterfaceProfile, images: int = DEFAULT_IMAGES,
                       executor: Optional[BoundedExecutor] = None) -> float:
    """∫∫ λ(f(x), f(y), x−y) dx dy：x 取一个周期（或整条直线），y 取整条直线"""
    _require_half_plane(profile, "lambda_dissipation")
    if profile.domain.is_periodic:
        return _periodic_rate_sum(profile, lambda_rate, 0.5, 0.5, images, executor)
    return _asymptotic_rate_sum(profile, lambda_rate, 0.5, executor)


def tilde_lambda_dissipation(profile: InterfaceProfile, images: int = DEFAULT_IMAGES,
                             executor: Optional[BoundedExecutor] = None) -> float:
    """∫∫ λ̃(f(x), f(y), x−y)，逐点 λ̃ ≥ λ，因此总是不小于 lambda_dissipation"""
    _require_half_plane(profile, "tilde_lambda_dissipation")
    if profile.domain.is_periodic:
        return _periodic_rate_sum(profile, tilde_lambda_rate, 1.0, 1.0, images, executor)
    return _asymptotic_rate_sum(profile, tilde_lambda_rate, 1.0, executor)


def _ln_rows_periodic(f: np.ndarray, x: np.ndarray, nu: float, images: int, sigma: float,
                      diag_value: np.ndarray) -> Callable[[slice], np.ndarray]:
    shifts = _image_offsets(nu, images)
    centre = images
    tail = 2.0 * float(polygamma(1, images + 1)) / nu ** 2

    def rows_fn(rows: slice) -> np.ndarray:
        c = (x[rows, None] - x[None, :])[:, :, None] + shifts[None, None, :]
        d = (f[rows, None] + sigma * f[None, :])[:, :, None]
        pole = c == 0.0
        vals = np.where(pole, 0.0, np.log1p((d / np.where(pole, 1.0, c)) ** 2))
        local = np.arange(rows.start, rows.stop)
        vals[np.arange(local.size), local, centre] = diag_value[local]
        far = (f[rows, None] + sigma * f[None, :]) ** 2 * tail
        return np.sum(vals, axis=(1, 2)) + np.sum(far, axis=1)

    return rows_fn


def ln_dissipation_plane(profile: InterfaceProfile, images: int = DEFAULT_IMAGES,
                         diagonal: str = "zero",
                         executor: Optional[BoundedExecutor] = None) -> float:
    """∫_S∫_R ln(1 + ((f(x) − f(y))/(x − y))²) dy dx

    diagonal="zero"（默认）在 x = y 处取 0 权重，diagonal="limit" 改取极限 ln(1 + f_x²)。
    """
    if diagonal not in ("limit", "zero"):
        raise ValueError(f"diagonal must be 'limit' or 'zero', got {diagonal!r}")
    f = profile.samples
    x = profile.x
    dx = profile.dx
    fx = derivative(profile, 1)
    diag = np.log1p(fx * fx) if diagonal == "limit" else np.zeros_like(f)

    if profile.domain.is_periodic:
        rows_fn = _ln_rows_periodic(f, x, profile.domain.period, images, -1.0, diag)
        return ordered_sum(rows_fn, profile.n, executor) * dx * dx

    w = _trapezoid_weights(profile.n)

    def rows_fn(rows: slice) -> np.ndarray:
        c = x[rows, None] - x[None, :]
        d = f[rows, None] - f[None, :]
        pole = c == 0.0
        vals = np.where(pole, diag[rows, None], np.log1p((d / np.where(pole, 1.0, c)) ** 2))
        return np.sum(vals * w[None, :], axis=1)

    inner = float(np.sum(w * ordered_row_map(rows_fn, profile.n, executor))) * dx * dx
    excess = f - profile.domain.psi_inf
    outside = np.zeros_like(f)
    for gap in (x[-1] - x, x - x[0]):
        open_gap = gap > 0.0
        outside += np.where(open_gap, log_kernel_tail(excess, np.where(open_gap, gap, 1.0)),
                            math.pi * np.abs(excess))
    return inner + 2.0 * float(np.sum(w * outside)) * dx


def ln_dissipation_halfplane(profile: InterfaceProfile, images: int = DEFAULT_IMAGES,
                             executor: Optional[BoundedExecutor] = None) -> float:
    """Σ_± ∫_0^ν∫_R ln(1 + ((f(x) ± f(y))/(x − y))²)，周期半平面

    与 4π·∫f 之差等于 d/dt‖f‖²。"+" 项在 x = y 处为对数奇性，对角格点用
    [−dx/2, dx/2] 上的精确格积分代替点值。
    """
    _require_half_plane(profile, "ln_dissipation_halfplane")
    if not profile.domain.is_periodic:
        raise DomainMismatchError("ln_dissipation_halfplane is implemented for periodic domains only")
    f = profile.samples
    x = profile.x
    dx = profile.dx
    nu = profile.domain.period
    fx = derivative(profile, 1)

    minus_fn = _ln_rows_periodic(f, x, nu, images, -1.0, np.log1p(fx * fx))
    big_d = 2.0 * f
    half = 0.5 * dx
    with np.errstate(divide='ignore', invalid='ignore'):
        cell = np.where(big_d > 0.0,
                        np.log1p((big_d / half) ** 2) + 4.0 * big_d * np.arctan(half / big_d) / dx,
                        0.0)
    plus_fn = _ln_rows_periodic(f, x, nu, images, 1.0, cell)

    total = (ordered_row_map(minus_fn, profile.n, executor)
             + ordered_row_map(plus_fn, profile.n, executor))
    return float(np.sum(total)) * dx * dx


# ---------------------------------------------------------------------------
# 记录
# ---------------------------------------------------------------------------

def compute_record(profile: InterfaceProfile, t: float, previous: Optional[DiagnosticsRecord],
                   gamma_prime: float = 0.5,
                   executor: Optional[BoundedExecutor] = None) -> DiagnosticsRecord:
    """一条诊断记录；爆破泛函 ∫‖f_xx‖⁴ 在相邻记录之间按梯形累加"""
    holder = holder_seminorm_fxx(profile, gamma_prime)
    accumulator = 0.0
    if previous is not None:
        accumulator = previous.blowup_accumulator + 0.5 * (t - previous.t) * (
            previous.holder_fxx ** 4 + holder ** 4)
    half = profile.domain.is_half_plane
    return DiagnosticsRecord(
        t=float(t),
        max_slope=max_slope(profile),
        l1_mass=l1_mass(profile),
        l2_energy=l2_energy(profile),
        lambda_dissipation=lambda_dissipation(profile, executor=executor) if half else None,
        ln_dissipation=None if half else ln_dissipation_plane(profile, executor=executor),
        min_height=min_height(profile),
        holder_fxx=holder,
        blowup_accumulator=accumulator,
    )


# ---------------------------------------------------------------------------
# 检查
# ---------------------------------------------------------------------------

def check_monotone(records: Sequence[DiagnosticsRecord], key: str, tol: float = 1e-6,
                   plane_kind: PlaneKind = PlaneKind.HALF) -> CheckReport:
    """记录时刻上 key 非增（容差 tol）；max_slope 需初值斜率不超过半平面 3/10、全平面 1"""
    name = f"monotone_{key}"
    if key not in ("max_slope", "l2_energy"):
        raise ValueError(f"check_monotone key must be 'max_slope' or 'l2_energy', got {key!r}")
    if len(records) < 2:
        return CheckReport.not_applicable(name, "need at least 2 records", tol=tol)
    if key == "max_slope":
        limit = HALF_PLANE_SLOPE_BOUND if plane_kind is PlaneKind.HALF else PLANE_SLOPE_BOUND
        if records[0].max_slope > limit:
            return CheckReport.not_applicable(
                name, f"initial max_slope {records[0].max_slope:.6g} exceeds {limit:g}",
                tol=tol, plane=plane_kind.value)

    values = [getattr(r, key) for r in records]
    increments = np.diff(values)
    worst = int(np.argmax(increments))
    largest = float(increments[worst])
    status = STATUS_PASS if largest <= tol else STATUS_FAIL
    detail: Dict[str, Any] = {"records": len(records)}
    if status == STATUS_FAIL:
        detail["offending_pair"] = {"t": [records[worst].t, records[worst + 1].t],
                                    key: [values[worst], values[worst + 1]]}
    return CheckReport(check=name, params={"tol": tol, "plane": plane_kind.value},
                       value=max(largest, 0.0), bound=tol, status=status, detail=detail)


def check_energy_inequality(records: Sequence[DiagnosticsRecord], tol: float = 1e-6,
                            slack: float = 0.1) -> CheckReport:
    """(E₂ − E₁)/(t₂ − t₁) ≤ −(1 − slack)·min(Λ₁, Λ₂) + tol 对每对相邻记录成立"""
    name = "energy_inequality"
    params = {"tol": tol, "slack": slack}
    if len(records) < 2:
        return CheckReport.not_applicable(name, "need at least 2 records", **params)
    if any(r.lambda_dissipation is None for r in records):
        return CheckReport.not_applicable(name, "records carry no lambda_dissipation", **params)

    worst_margin = -math.inf
    worst_pair = None
    for r1, r2 in zip(records, records[1:]):
        if r2.t <= r1.t:
            continue
        rate = (r2.l2_energy - r1.l2_energy) / (r2.t - r1.t)
        bound = -(1.0 - slack) * min(r1.lambda_dissipation, r2.lambda_dissipation) + tol
        margin = rate - bound
        if margin > worst_margin:
            worst_margin, worst_pair = margin, (r1.t, r2.t, rate, bound)
    if worst_pair is None:
        return CheckReport.not_applicable(name, "records do not advance in time", **params)
    status = STATUS_PASS if worst_margin <= 0.0 else STATUS_FAIL
    return CheckReport(check=name, params=params, value=worst_pair[2], bound=worst_pair[3],
                       status=status,
                       detail={"worst_pair_t": [worst_pair[0], worst_pair[1]],
                               "worst_margin": worst_margin})


def check_mass(records: Sequence[DiagnosticsRecord], tol: float = 1e-6,
               clamp_mass: float = 0.0) -> CheckReport:
    """max |m(t) − m(0)| ≤ tol；夹紧补充的质量单独列出"""
    name = "mass_conservation"
    if not records:
        return CheckReport.not_applicable(name, "no records", tol=tol)
    masses = np.array([r.l1_mass for r in records])
    drift = float(np.max(np.abs(masses - masses[0])))
    final_drift = float(masses[-1] - masses[0])
    return CheckReport(
        check=name, params={"tol": tol}, value=drift, bound=tol,
        status=STATUS_PASS if drift <= tol else STATUS_FAIL,
        detail={"clamp_induced_drift": clamp_mass,
                "final_drift": final_drift,
                "final_drift_excluding_clamp": final_drift - clamp_mass},
    )


def check_ln_dissipation_identity(records: Sequence[DiagnosticsRecord], rel_tol: float = 0.02,
                                  abs_tol: float = 1e-10) -> CheckReport:
    """全平面：相邻记录的 ΔE/Δt 与 −(D₁ + D₂)/2 在相对 rel_tol 内一致"""
    name = "ln_dissipation_identity"
    params = {"rel_tol": rel_tol, "abs_tol": abs_tol}
    if len(records) < 2:
        return CheckReport.not_applicable(name, "need at least 2 records", **params)
    if any(r.ln_dissipation is None for r in records):
        return CheckReport.not_applicable(name, "records carry no ln_dissipation", **params)

    worst = None
    for r1, r2 in zip(records, records[1:]):
        if r2.t <= r1.t:
            continue
        rate = (r2.l2_energy - r1.l2_energy) / (r2.t - r1.t)
        expected = -0.5 * (r1.ln_dissipation + r2.ln_dissipation)
        excess = abs(rate - expected) - (rel_tol * abs(expected) + abs_tol)
        if worst is None or excess > worst[0]:
            worst = (excess, r1.t, r2.t, rate, expected)
    if worst is None:
        return CheckReport.not_applicable(name, "records do not advance in time", **params)
    return CheckReport(check=name, params=params, value=worst[3], bound=worst[4],
                       status=STATUS_PASS if worst[0] <= 0.0 else STATUS_FAIL,
                       detail={"worst_pair_t": [worst[1], worst[2]]})


def singularity_time_bound(psi: InterfaceProfile, height_tol: float = 1e-12) -> Optional[float]:
    """奇性时间上界 20·ν¹⁰·‖ψ‖²/L⁶（L/ν² ∈ (0, 3/40)），前提不满足返回 None

    周期 ν 的数据经 f ↦ f(νx, νt)/ν 变成周期 1，L 与 ‖ψ‖² 分别按 ν⁻²、ν⁻³ 缩放。
    """
    domain = psi.domain
    if not (domain.is_periodic and domain.is_half_plane):
        return None
    if min_height(psi) > height_tol or max_slope(psi) > HALF_PLANE_SLOPE_BOUND + 1e-12:
        return None
    nu = domain.period
    mass = l1_mass(psi)
    scaled = mass / nu ** 2
    if not 0.0 < scaled < SINGULARITY_MASS_BOUND:
        return None
    return 20.0 * nu ** 10 * l2_energy(psi) / mass ** 6


__all__ = [
    "DIAGNOSTICS_COLUMNS",
    "OPTIONAL_COLUMNS",
    "STATUS_PASS",
    "STATUS_FAIL",
    "STATUS_NOT_APPLICABLE",
    "DiagnosticsRecord",
    "CheckReport",
    "lambda_dissipation",
    "tilde_lambda_dissipation",
    "ln_dissipation_plane",
    "ln_dissipation_halfplane",
    "compute_record",
    "check_monotone",
    "check_energy_inequality",
    "check_mass",
    "check_ln_dissipation_identity",
    "singularity_time_bound",
]
