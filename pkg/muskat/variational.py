"""
变分验证
泛函 H / H⁺ 在分段线性候选上的精确求值、g 的极值结构、积分恒等式与不等式，
以及 H⁺ 在约束集上的多起点投影梯度极小化
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from .diagnostics import STATUS_FAIL, STATUS_PASS, CheckReport
from .exceptions import VariationalError
from .kernels import (SlopeParam, dB_G_minus, dB_G_plus, g_fun, g_prime_numerator,
                      h_kernel, linear_primitive, linear_primitive_grad, tent_primitive)

logger = logging.getLogger(__name__)

VARIATIONAL_A_MAX = 0.3
SINGULAR_SLOPE_TOL = 1e-9
_IMPROVEMENT_RTOL = 1e-14


def _param(a) -> SlopeParam:
    return a if isinstance(a, SlopeParam) else SlopeParam(float(a))


# ---------------------------------------------------------------------------
# 候选函数
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariationalCandidate:
    """[0, Y] 上 M 个等距格子的分段线性候选，f(0) = 1、f′(0) = −a、斜率 ∈ [−a, a]、f ≥ 0"""
    a: SlopeParam
    Y: float
    M: int
    samples: np.ndarray

    def __post_init__(self):
        values = np.array(self.samples, dtype=float, copy=True).reshape(-1)
        a = self.a.a
        if self.M < 1 or values.size != self.M + 1:
            raise VariationalError(f"candidate needs M + 1 = {self.M + 1} samples, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise VariationalError("candidate samples must be finite")
        dx = self.Y / self.M
        slopes = np.diff(values) / dx
        problems = []
        if abs(values[0] - 1.0) > 1e-12:
            problems.append(f"f(0) = {values[0]!r}, expected 1")
        if abs(slopes[0] + a) > dx:
            problems.append(f"first slope {slopes[0]!r} differs from −a = {-a!r}")
        if np.any(np.abs(slopes) > a * (1.0 + 1e-9) + 1e-12):
            problems.append(f"slopes leave [−a, a]: max |f′| = {np.max(np.abs(slopes))!r}")
        if np.any(values < 0.0):
            problems.append("candidate takes negative values")
        if values[-1] > a * self.Y + 1.0 + 1e-12:
            problems.append("f(Y) exceeds aY + 1")
        if problems:
            raise VariationalError("inadmissible candidate: " + "; ".join(problems))
        values.flags.writeable = False
        object.__setattr__(self, 'samples', values)

    @property
    def dx(self) -> float:
        return self.Y / self.M

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.dx

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.samples) / self.dx


def _uniform(a, Y: float, M: int, fn: Callable[[np.ndarray, float], np.ndarray]) -> VariationalCandidate:
    p = _param(a)
    y = np.arange(M + 1) * (Y / M)
    return VariationalCandidate(p, float(Y), int(M), fn(y, p.a))


def tent_candidate(a, Y: float, M: int) -> VariationalCandidate:
    """a|y − a⁻¹|；网格含 a⁻¹ 时精确"""
    return _uniform(a, Y, M, lambda y, s: np.abs(1.0 - s * y))


def descending_candidate(a, Y: float, M: int) -> VariationalCandidate:
    """max{1 − ay, 0}：下降到 0 后保持平坦"""
    return _uniform(a, Y, M, lambda y, s: np.maximum(1.0 - s * y, 0.0))


def rebound_candidate(a, Y: float, M: int, turn: float = 0.5) -> VariationalCandidate:
    """1 − ay 到 y = turn/a，之后以 +a 上升"""
    def build(y, s):
        y_turn = turn / s
        return np.where(y <= y_turn, 1.0 - s * y, 1.0 - turn + s * (y - y_turn))
    return _uniform(a, Y, M, build)


def plateau_candidate(a, Y: float, M: int, level: float = 0.3) -> VariationalCandidate:
    """1 − ay 下降到 level 后保持平坦"""
    return _uniform(a, Y, M, lambda y, s: np.maximum(1.0 - s * y, level))


def slow_rise_candidate(a, Y: float, M: int, turn: float = 0.7) -> VariationalCandidate:
    """1 − ay 到 y = turn/a，之后以 +a/2 上升"""
    def build(y, s):
        y_turn = turn / s
        return np.where(y <= y_turn, 1.0 - s * y, 1.0 - turn + 0.5 * s * (y - y_turn))
    return _uniform(a, Y, M, build)


START_BUILDERS: Dict[str, Callable[..., VariationalCandidate]] = {
    "tent": tent_candidate,
    "descending": descending_candidate,
    "rebound": rebound_candidate,
    "plateau": plateau_candidate,
    "slow_rise": slow_rise_candidate,
}


def two_sided_tent(a, Y: float, M: int) -> Tuple[np.ndarray, np.ndarray]:
    """[−Y, Y] 上的 |1 − ay|，节点包含 0 与折点 a⁻¹"""
    p = _param(a)
    half = np.linspace(0.0, Y, M + 1)
    kink = 1.0 / p.a
    grid = np.union1d(-half, half)
    # 与折点几乎重合的网格点会产生退化格子
    grid = grid[np.abs(grid - kink) > 1e-12 * Y]
    y = np.union1d(grid, [kink])
    return y, np.abs(1.0 - p.a * y)


# ---------------------------------------------------------------------------
# H 与 H⁺
# ---------------------------------------------------------------------------

def _singular_value(p: SlopeParam, slope: float) -> float:
    """r = −s·y 的格子：h = (1 − s² + As)/((1+s²)² y²)，系数为 0 时积分为 0，否则发散"""
    coeff = 1.0 - slope * slope + p.A * slope
    if abs(slope + p.a) <= SINGULAR_SLOPE_TOL or coeff == 0.0:
        return 0.0
    return math.inf if coeff > 0 else -math.inf


def _cells(p: SlopeParam, y: np.ndarray, f: np.ndarray, f0: float, sigma: float) -> np.ndarray:
    """每个格子上 ∫ h(y, f0 + σ f(y)) dy（f 线性插值，Φ 精确原函数）"""
    y0, y1 = y[:-1], y[1:]
    s = np.diff(f) / np.diff(y)
    B = f0 + sigma * (f[:-1] - s * y0)
    c = sigma * s
    out = np.zeros(s.size)
    singular = ((y0 == 0.0) | (y1 == 0.0)) if sigma < 0 else np.zeros(s.size, dtype=bool)
    regular = ~singular
    if np.any(regular):
        out[regular] = (np.asarray(linear_primitive(p, B[regular], c[regular], y1[regular]))
                        - np.asarray(linear_primitive(p, B[regular], c[regular], y0[regular])))
    for k in np.flatnonzero(singular):
        out[k] = _singular_value(p, float(s[k]))
    return out


def _ray(p: SlopeParam, y_end: float, f_end: float, slope: float, f0: float, direction: int) -> float:
    """端点外按端点斜率线性延拓（触到 0 后保持 0）的两项尾积分"""
    # 延拓方向上 f 的变化率
    rate = slope * direction
    total = 0.0
    y_zero = None
    if rate < 0.0 and f_end > 0.0:
        y_zero = y_end + direction * f_end / (-rate)
    elif f_end <= 0.0 and rate <= 0.0:
        y_zero = y_end
    for sigma in (1.0, -1.0):
        B = f0 + sigma * (f_end - slope * y_end)
        c = sigma * slope
        if y_zero is None:
            far = math.inf * direction
            total += direction * (linear_primitive(p, B, c, far) - linear_primitive(p, B, c, y_end))
        elif y_zero != y_end:
            total += direction * (linear_primitive(p, B, c, y_zero) - linear_primitive(p, B, c, y_end))
    if y_zero is not None:
        # f ≡ 0 之后两项都是 h(y, f0)
        total += 2.0 * direction * (0.0 - linear_primitive(p, f0, 0.0, y_zero))
    return total


def H_functional(a, y: Sequence[float], f: Sequence[float]) -> float:
    """H(f) = ∫_R [h(y, f(0) + f(y)) + h(y, f(0) − f(y))] dy

    f 取节点 y（严格递增、含 0）上的分段线性插值，两端按端点斜率线性延拓，
    每个格子用 Φ 精确积分。
    """
    p = _param(a)
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.size != f.size or y.size < 3:
        raise ValueError("H_functional needs matching node and value arrays")
    if np.any(np.diff(y) <= 0.0):
        raise ValueError("nodes must be strictly increasing")
    zero = np.flatnonzero(y == 0.0)
    if zero.size != 1:
        raise ValueError("nodes must contain y = 0")
    f0 = float(f[zero[0]])
    if not f0 > 0.0:
        raise VariationalError(f"H requires f(0) > 0, got {f0!r}")
    cells = _cells(p, y, f, f0, 1.0) + _cells(p, y, f, f0, -1.0)
    slope_l = (f[1] - f[0]) / (y[1] - y[0])
    slope_r = (f[-1] - f[-2]) / (y[-1] - y[-2])
    tails = (_ray(p, float(y[0]), float(f[0]), slope_l, f0, -1)
             + _ray(p, float(y[-1]), float(f[-1]), slope_r, f0, 1))
    return float(np.sum(cells) + tails)


def _plus_tail(p: SlopeParam, dx: float, f: np.ndarray) -> float:
    Y = dx * (f.size - 1)
    return _ray(p, Y, float(f[-1]), float((f[-1] - f[-2]) / dx), 1.0, 1)


def H_plus_with_gradient(a, dx: float, f: np.ndarray) -> Tuple[float, np.ndarray]:
    """H⁺ 及其对节点值 f_k 的梯度（f_0 = 1 固定，梯度第 0 项置 0）"""
    p = _param(a)
    f = np.asarray(f, dtype=float)
    n = f.size
    y = np.arange(n) * dx
    value = 0.0
    grad = np.zeros(n)
    y0, y1 = y[:-1], y[1:]
    s = np.diff(f) / dx
    for sigma in (1.0, -1.0):
        B = 1.0 + sigma * (f[:-1] - s * y0)
        c = sigma * s
        regular = np.ones(s.size, dtype=bool)
        if sigma < 0:
            regular[0] = False
            value += _singular_value(p, float(s[0]))
        Br, cr = B[regular], c[regular]
        value += float(np.sum(np.asarray(linear_primitive(p, Br, cr, y1[regular]))
                              - np.asarray(linear_primitive(p, Br, cr, y0[regular]))))
        dB1, dc1 = linear_primitive_grad(p, Br, cr, y1[regular])
        dB0, dc0 = linear_primitive_grad(p, Br, cr, y0[regular])
        dI_dB = np.asarray(dB1) - np.asarray(dB0)
        dI_dc = np.asarray(dc1) - np.asarray(dc0)
        yk = y0[regular]
        left = np.flatnonzero(regular)
        grad[left] += dI_dB * sigma * (1.0 + yk / dx) - dI_dc * sigma / dx
        grad[left + 1] += -dI_dB * sigma * yk / dx + dI_dc * sigma / dx

    value += _plus_tail(p, dx, f)
    for k in (n - 2, n - 1):
        step = 1e-7 * max(1.0, abs(f[k]))
        up, down = f.copy(), f.copy()
        up[k] += step
        down[k] -= step
        grad[k] += (_plus_tail(p, dx, up) - _plus_tail(p, dx, down)) / (2.0 * step)
    grad[0] = 0.0
    return value, grad


def H_plus(a, candidate: VariationalCandidate) -> float:
    """H⁺(f) = ∫_0^∞ [h(y, 1 + f(y)) + h(y, 1 − f(y))] dy（分段线性精确 + 线性延拓尾项）"""
    p = _param(a) if a is not None else candidate.a
    y = candidate.y
    f = candidate.samples
    cells = _cells(p, y, f, 1.0, 1.0) + _cells(p, y, f, 1.0, -1.0)
    return float(np.sum(cells) + _plus_tail(p, candidate.dx, f))


def H_plus_tent(a) -> float:
    """H⁺(tent) 的闭式值 −(1 − 3a²)/(4a(1 + a²))"""
    p = _param(a)
    return -(1.0 - 3.0 * p.a ** 2) / (4.0 * p.a * (1.0 + p.a ** 2))


def cusp_control_constant(candidate: VariationalCandidate) -> float:
    """max_{0 < y ≤ 1} |f(y) − (1 − ay)| / y^{3/2}（观测量，不作为约束）"""
    y = candidate.y
    mask = (y > 0.0) & (y <= 1.0 + 1e-12)
    if not np.any(mask):
        return 0.0
    dev = np.abs(candidate.samples[mask] - (1.0 - candidate.a.a * y[mask]))
    return float(np.max(dev / y[mask] ** 1.5))


def distance_to_tent(candidate: VariationalCandidate) -> float:
    return float(np.max(np.abs(candidate.samples - np.abs(1.0 - candidate.a.a * candidate.y))))


# ---------------------------------------------------------------------------
# g 的结构
# ---------------------------------------------------------------------------

def _scan_roots(fn: Callable, lo: float, hi: float, points: int) -> List[float]:
    grid = np.linspace(lo, hi, points)
    vals = np.asarray(fn(grid))
    roots = []
    for k in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        roots.append(bisect(fn, grid[k], grid[k + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
    for k in np.flatnonzero(vals == 0.0):
        roots.append(float(grid[k]))
    return sorted(roots)


def g_extrema(a) -> Tuple[float, float, float, float]:
    """g′ 的四个零点 s1 < −a⁻¹ < s2 < −a < 0 < s3 < a < s4，且 g(s1) < 0 < g(s2)、g(s3) < 0 < g(s4)"""
    p = _param(a)
    if p.a > VARIATIONAL_A_MAX:
        raise ValueError(f"g_extrema requires a ∈ (0, 3/10], got {p.a!r}")
    span = max(50.0, 2.0 * p.A + 10.0)
    roots = _scan_roots(lambda s: g_prime_numerator(p, s), -span, span, 400001)
    if len(roots) != 4:
        raise VariationalError(f"g′ has {len(roots)} sign changes on [−{span:g}, {span:g}], expected 4",
                               log=roots)
    s1, s2, s3, s4 = roots
    order_ok = s1 < -1.0 / p.a < s2 < -p.a < 0.0 < s3 < p.a < s4
    values = [g_fun(p, s) for s in roots]
    signs_ok = values[0] < 0 < values[1] and values[2] < 0 < values[3]
    if not (order_ok and signs_ok):
        raise VariationalError(f"g extrema structure violated at a={p.a!r}: roots={roots}, g={values}",
                               log=list(zip(roots, values)))
    logger.debug(f"g 极值点: a={p.a}, roots={roots}")
    return s1, s2, s3, s4


def g_prime_sign_changes(a, span: float = 50.0, points: int = 400001) -> int:
    p = _param(a)
    return len(_scan_roots(lambda s: g_prime_numerator(p, s), -span, span, points))


def verify_g_below_minus_a(a, samples: int = 20000) -> CheckReport:
    """对 s < −a 的采样点检查 g(s) > g(−a)"""
    p = _param(a)
    span = max(50.0, 2.0 * p.A + 10.0)
    s = np.linspace(-span, -p.a, samples, endpoint=False)
    ref = g_fun(p, -p.a)
    gap = np.asarray(g_fun(p, s)) - ref
    worst = int(np.argmin(gap))
    return CheckReport(
        check="g_above_value_at_minus_a", params={"a": p.a, "samples": samples},
        value=float(gap[worst]), bound=0.0,
        status=STATUS_PASS if gap[worst] > 0.0 else STATUS_FAIL,
        detail={"worst_s": float(s[worst]), "g_minus_a": ref},
    )


def verify_interval_inequality(a, b_samples: Sequence[float], s0_samples: Sequence[float]) -> CheckReport:
    """∫_{s0−a}^{s0−b} g ds > ∫_b^a g ds，差值须超过两侧求积误差估计之和"""
    p = _param(a)
    b_arr = np.asarray(b_samples, dtype=float)
    s0_arr = np.asarray(s0_samples, dtype=float)
    if np.any(b_arr < -p.a) or np.any(b_arr >= p.a):
        raise ValueError("b samples must lie in [−a, a)")
    if np.any(s0_arr >= 0.0):
        raise ValueError("s0 samples must be negative")

    def g(s: float) -> float:
        return g_fun(p, s)

    worst = None
    failures = 0
    for b in b_arr:
        right, right_err = quad(g, b, p.a, epsabs=1e-13, epsrel=1e-12)
        for s0 in s0_arr:
            left, left_err = quad(g, s0 - p.a, s0 - b, epsabs=1e-13, epsrel=1e-12)
            margin = left - right
            budget = left_err + right_err
            if margin <= budget:
                failures += 1
            if worst is None or margin - budget < worst[0] - worst[1]:
                worst = (margin, budget, float(b), float(s0))
    return CheckReport(
        check="g_interval_inequality", params={"a": p.a, "pairs": int(b_arr.size * s0_arr.size)},
        value=worst[0], bound=worst[1],
        status=STATUS_PASS if failures == 0 else STATUS_FAIL,
        detail={"worst_b": worst[2], "worst_s0": worst[3], "failures": failures},
    )


# ---------------------------------------------------------------------------
# 积分恒等式
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegralCheck:
    quadrature: float
    quadrature_error: float
    closed_form: float
    bound: Optional[float] = None


def boundary_integral(a, p_value: float) -> IntegralCheck:
    """∫_p^∞ [−g((2−2ap)/y + a) + g(2ap/y − a)] y⁻³ dy

    求积结果等于 ∂_B G⁺(2−2ap, p) − ∂_B G⁻(2ap, p)；closed_form 按 2a 归一化，
    并应小于 −4(1−ap)²/[p² + (2−ap)²]²。
    """
    p = _param(a)
    a_ = p.a
    if not 0.0 < p_value < 1.0 / a_:
        raise ValueError(f"p must lie in (0, 1/a) = (0, {1.0 / a_!r}), got {p_value!r}")
    top = 2.0 - 2.0 * a_ * p_value
    bottom = 2.0 * a_ * p_value

    def integrand(y: float) -> float:
        return (-g_fun(p, top / y + a_) + g_fun(p, bottom / y - a_)) / y ** 3

    value, err = quad(integrand, p_value, np.inf, epsabs=1e-12, epsrel=1e-11, limit=200)
    difference = dB_G_plus(p, top, p_value) - dB_G_minus(p, bottom, p_value)
    bound = -4.0 * (1.0 - a_ * p_value) ** 2 / (p_value ** 2 + (2.0 - a_ * p_value) ** 2) ** 2
    return IntegralCheck(quadrature=value, quadrature_error=err,
                         closed_form=2.0 * a_ * difference, bound=bound)


def zero_identity_integral(a) -> IntegralCheck:
    """∂_B G⁺(0, a⁻¹) − ∂_B G⁻(2, a⁻¹) = a/(2(1+a²)) − a/(2(1+a²)) = 0，
    以及 ∫_{a⁻¹}^∞ [−g(a) + g(2/y − a)] y⁻³ dy 的直接求积"""
    p = _param(a)
    if p.a > VARIATIONAL_A_MAX:
        raise ValueError(f"zero_identity_integral requires a ∈ (0, 3/10], got {p.a!r}")
    start = 1.0 / p.a
    g_a = g_fun(p, p.a)

    def integrand(y: float) -> float:
        return (-g_a + g_fun(p, 2.0 / y - p.a)) / y ** 3

    value, err = quad(integrand, start, np.inf, epsabs=1e-12, epsrel=1e-11, limit=200)
    closed = dB_G_plus(p, 0.0, start) - dB_G_minus(p, 2.0, start)
    return IntegralCheck(quadrature=value, quadrature_error=err, closed_form=closed)


def verify_flat_continuation(a, p_samples: Optional[Sequence[float]] = None) -> CheckReport:
    """p > a⁻¹ 时 −∂_B G⁺(1−ap, p) + ∂_B G⁻(1+ap, p) 与化简式
    −(2a/(1+a²))·(p² − Ap − 1)/(p² + 1)² 一致且为负"""
    p = _param(a)
    if p_samples is None:
        p_samples = (1.0 / p.a) * np.linspace(1.01, 20.0, 200)
    ps = np.asarray(p_samples, dtype=float)
    if np.any(ps <= 1.0 / p.a):
        raise ValueError("flat continuation check needs p > 1/a")
    direct = -np.asarray(dB_G_plus(p, 1.0 - p.a * ps, ps)) + np.asarray(dB_G_minus(p, 1.0 + p.a * ps, ps))
    simplified = -(2.0 * p.a / (1.0 + p.a ** 2)) * (ps ** 2 - p.A * ps - 1.0) / (ps ** 2 + 1.0) ** 2
    mismatch = float(np.max(np.abs(direct - simplified) / np.maximum(1.0, np.abs(simplified))))
    largest = float(np.max(direct))
    ok = mismatch <= 1e-12 and largest < 0.0
    return CheckReport(check="flat_continuation_derivative", params={"a": p.a, "samples": int(ps.size)},
                       value=largest, bound=0.0, status=STATUS_PASS if ok else STATUS_FAIL,
                       detail={"max_relative_mismatch": mismatch})


def check_h_nonneg(a_samples: Sequence[float], samples: int = 10000, seed: int = 0) -> CheckReport:
    """|r| ≤ a|y| 时 h_a(y, r) ≥ 0（随机采样，另含边界 r = ±ay）"""
    rng = np.random.default_rng(seed)
    worst = math.inf
    worst_at = None
    violations = 0
    for a in a_samples:
        p = _param(a)
        y = rng.uniform(-10.0, 10.0, samples)
        y = np.where(y == 0.0, 1.0, y)
        u = np.concatenate([rng.uniform(-1.0, 1.0, samples - 2), [-1.0, 1.0]])
        r = u * p.a * np.abs(y)
        # 乘 y² 后与尺度无关
        scaled = np.asarray(h_kernel(p, y, r)) * y * y
        bad = scaled < -1e-12
        violations += int(np.count_nonzero(bad))
        k = int(np.argmin(scaled))
        if scaled[k] < worst:
            worst, worst_at = float(scaled[k]), {"a": p.a, "y": float(y[k]), "r": float(r[k])}
    return CheckReport(check="h_nonnegative", params={"a": list(map(float, a_samples)), "samples": samples,
                                                      "seed": seed},
                       value=worst, bound=0.0, status=STATUS_PASS if violations == 0 else STATUS_FAIL,
                       detail={"violations": violations, "worst": worst_at})


def verify_tent_primitive(a, grid: Optional[Sequence[float]] = None, step: float = 1e-5) -> CheckReport:
    """d/dy [(1 − 3a² − 2a(1−a²)y)/(y² + (2−ay)²)] = a(1+a²)·h(y, 2 − ay)（中心差分）"""
    p = _param(a)
    ys = np.asarray(grid if grid is not None else np.linspace(-20.0, 20.0, 4001), dtype=float)
    fd = (np.asarray(tent_primitive(p, ys + step)) - np.asarray(tent_primitive(p, ys - step))) / (2.0 * step)
    exact = p.a * (1.0 + p.a ** 2) * np.asarray(h_kernel(p, ys, 2.0 - p.a * ys))
    deviation = float(np.max(np.abs(fd - exact)))
    return CheckReport(check="tent_primitive_derivative", params={"a": p.a, "points": int(ys.size)},
                       value=deviation, bound=1e-8,
                       status=STATUS_PASS if deviation <= 1e-8 else STATUS_FAIL)


def tent_line_integral(a, R: float) -> float:
    """∫_{−R}^{R} h(y, 2 − ay) dy，R → ∞ 时趋于 0"""
    p = _param(a)
    scale = p.a * (1.0 + p.a ** 2)
    return (tent_primitive(p, R) - tent_primitive(p, -R)) / scale


def verify_tent_identity(a, Y: Optional[float] = None, M: int = 2000) -> CheckReport:
    """两侧 tent 的 H 为 0（|H| ≤ 1e−4）"""
    p = _param(a)
    Y = Y if Y is not None else 10.0 / p.a
    y, f = two_sided_tent(p, Y, M)
    value = H_functional(p, y, f)
    return CheckReport(check="tent_identity", params={"a": p.a, "Y": Y, "M": M},
                       value=value, bound=1e-4,
                       status=STATUS_PASS if abs(value) <= 1e-4 else STATUS_FAIL)


# ---------------------------------------------------------------------------
# H⁺ 极小化
# ---------------------------------------------------------------------------

@dataclass
class StartOutcome:
    start: str
    value: float
    distance_to_tent: float
    iterations: int
    escapes: int
    log: List[Tuple[int, float, float, float]] = field(default_factory=list)


@dataclass
class MinimizeResult:
    candidate: VariationalCandidate
    value: float
    distance_to_tent: float
    start: str
    log: List[Tuple[int, float, float, float]]
    outcomes: List[StartOutcome]


class _SlopeSpace:
    """斜率空间参数化：d_0 = −a 固定，d ∈ [−a, a]，f = max(1 + dx·cumsum(d), 0)"""

    def __init__(self, p: SlopeParam, dx: float, M: int):
        self.p = p
        self.dx = dx
        self.M = M

    def profile(self, d: np.ndarray) -> np.ndarray:
        d = np.clip(d, -self.p.a, self.p.a)
        d[0] = -self.p.a
        f = 1.0 + self.dx * np.concatenate([[0.0], np.cumsum(d)])
        return np.maximum(f, 0.0)

    def project(self, d: np.ndarray) -> np.ndarray:
        return np.diff(self.profile(np.array(d, dtype=float))) / self.dx

    def objective(self, d: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        f = self.profile(np.array(d, dtype=float))
        value, gf = H_plus_with_gradient(self.p, self.dx, f)
        # f_k = 0 时只允许向上移动
        active = (f > 0.0) | (gf < 0.0)
        weighted = np.where(active, gf, 0.0)
        suffix = np.cumsum(weighted[::-1])[::-1]
        gd = self.dx * suffix[1:]
        gd[0] = 0.0
        return value, gd, f


def _spg(space: _SlopeSpace, d0: np.ndarray, rng: np.random.Generator, max_iter: int,
         gtol: float, max_escapes: int, kick: float, memory: int = 10):
    x = space.project(d0)
    J, g, f = space.objective(x)
    best_J, best_f = J, f
    log: List[Tuple[int, float, float, float]] = []
    alpha = 1.0 / max(float(np.max(np.abs(g))), 1e-12)
    history = deque([J], maxlen=memory)
    escapes = 0
    it = 0
    for it in range(max_iter):
        pg = space.project(x - g) - x
        pg_norm = float(np.max(np.abs(pg)))
        log.append((it, J, pg_norm, alpha))
        if pg_norm <= gtol:
            if escapes >= max_escapes:
                break
            escapes += 1
            x = space.project(x + rng.normal(0.0, kick * space.p.a, x.size))
            J, g, f = space.objective(x)
            history = deque([J], maxlen=memory)
            alpha = 1.0 / max(float(np.max(np.abs(g))), 1e-12)
            continue
        direction = space.project(x - alpha * g) - x
        slope = float(np.dot(g, direction))
        if slope >= 0.0:
            # f ≥ 0 截断使投影方向不再下降，缩小步长重试
            if alpha <= 1e-12:
                break
            alpha = max(alpha * 0.1, 1e-12)
            continue
        reference = max(history)
        lam = 1.0
        while True:
            trial = x + lam * direction
            J_new, g_new, f_new = space.objective(trial)
            if J_new <= reference + 1e-4 * lam * slope or lam < 1e-12:
                break
            lam *= 0.5
        s = trial - x
        yv = g_new - g
        sty = float(np.dot(s, yv))
        alpha = min(max(float(np.dot(s, s)) / sty, 1e-12), 1e6) if sty > 0.0 else 1e6
        x, J, g, f = trial, J_new, g_new, f_new
        history.append(J)
        if J < best_J - _IMPROVEMENT_RTOL * abs(best_J):
            best_J, best_f = J, f
    return best_J, best_f, log, it + 1, escapes


def minimize_H_plus(a, Y: Optional[float] = None, M: int = 2000,
                    starts: Optional[Sequence[str]] = None, max_iter: int = 3000,
                    gtol: float = 1e-10, tol: float = 0.05, seed: int = 0,
                    max_escapes: int = 3, kick: float = 0.25) -> MinimizeResult:
    """多起点投影梯度（BB 步长 + 非单调回溯）极小化 H⁺

    返回所有起点中 H⁺ 最小的候选；其到 tent 的 sup 距离超过 tol 时抛
    VariationalError 并附带各起点的迭代日志。
    """
    p = _param(a)
    Y = Y if Y is not None else 10.0 / p.a
    if Y < 10.0 / p.a * (1.0 - 1e-12):
        raise ValueError(f"minimize_H_plus needs Y ≥ 10/a = {10.0 / p.a!r}, got {Y!r}")
    names = list(starts) if starts is not None else list(START_BUILDERS)
    unknown = [n for n in names if n not in START_BUILDERS]
    if unknown:
        raise ValueError(f"unknown start(s): {unknown}")

    space = _SlopeSpace(p, Y / M, M)
    rng = np.random.default_rng(seed)
    outcomes: List[StartOutcome] = []
    best: Optional[Tuple[float, np.ndarray, str, list]] = None
    for name in names:
        start = START_BUILDERS[name](p, Y, M)
        value, f, log, iterations, escapes = _spg(space, start.slopes, rng, max_iter, gtol,
                                                  max_escapes, kick)
        candidate = VariationalCandidate(p, Y, M, f)
        dist = distance_to_tent(candidate)
        outcomes.append(StartOutcome(name, value, dist, iterations, escapes, log))
        logger.info(f"H⁺ 极小化: start={name}, value={value:.12g}, distance={dist:.3e}, "
                    f"iterations={iterations}, escapes={escapes}")
        if best is None or value < best[0]:
            best = (value, f, name, log)

    value, f, name, log = best
    candidate = VariationalCandidate(p, Y, M, f)
    dist = distance_to_tent(candidate)
    if dist > tol:
        raise VariationalError(
            f"best H⁺ candidate (start={name}, value={value:.12g}) is {dist:.3e} from the tent, tol={tol:g}",
            log=[(o.start, o.value, o.distance_to_tent, o.log) for o in outcomes])
    return MinimizeResult(candidate=candidate, value=value, distance_to_tent=dist, start=name,
                          log=log, outcomes=outcomes)


__all__ = [
    "VARIATIONAL_A_MAX",
    "VariationalCandidate",
    "IntegralCheck",
    "MinimizeResult",
    "StartOutcome",
    "START_BUILDERS",
    "tent_candidate",
    "descending_candidate",
    "rebound_candidate",
    "plateau_candidate",
    "slow_rise_candidate",
    "two_sided_tent",
    "H_functional",
    "H_plus",
    "H_plus_with_gradient",
    "H_plus_tent",
    "cusp_control_constant",
    "distance_to_tent",
    "g_extrema",
    "g_prime_sign_changes",
    "verify_g_below_minus_a",
    "verify_interval_inequality",
    "boundary_integral",
    "zero_identity_integral",
    "verify_flat_continuation",
    "check_h_nonneg",
    "verify_tent_primitive",
    "tent_line_integral",
    "verify_tent_identity",
    "minimize_H_plus",
]
