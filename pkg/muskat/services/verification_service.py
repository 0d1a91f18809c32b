"""
验证服务层
核函数恒等式与变分不等式的数值验证套件，逐项经有界线程池执行
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from ..config.settings import VerifySettings
from ..diagnostics import STATUS_FAIL, STATUS_PASS, CheckReport
from ..exceptions import MuskatError, VariationalError
from ..infrastructure.parallel import BoundedExecutor
from ..kernels import (G_minus, G_plus, SlopeParam, dB_G_minus, dB_G_plus, g_fun, h_kernel,
                       integrand_pair, lambda_rate, log_kernel_tail, periodized_kernel,
                       periodized_poisson_kernel, tilde_lambda_rate)
from ..variational import (H_plus, H_plus_tent, START_BUILDERS, boundary_integral,
                           check_h_nonneg, g_extrema, minimize_H_plus, tent_candidate,
                           verify_flat_continuation, verify_g_below_minus_a,
                           verify_interval_inequality, verify_tent_identity,
                           verify_tent_primitive, zero_identity_integral)

logger = logging.getLogger(__name__)

CheckItem = Tuple[str, Callable[[], List[CheckReport]]]


def _status(ok: bool) -> str:
    return STATUS_PASS if ok else STATUS_FAIL


# ---------------------------------------------------------------------------
# 核函数套件
# ---------------------------------------------------------------------------

def check_h_vanishes_on_ray(samples: int = 1000, seed: int = 0) -> CheckReport:
    """h_a(y, ay) = 0：随机 (a, y)，a ∈ (0, 1]，|y| ∈ [0.5, 10]"""
    rng = np.random.default_rng(seed)
    a = rng.uniform(1e-3, 1.0, samples)
    y = rng.uniform(0.5, 10.0, samples) * rng.choice([-1.0, 1.0], samples)
    worst = 0.0
    for a_k, y_k in zip(a, y):
        worst = max(worst, abs(h_kernel(SlopeParam(a_k), y_k, a_k * y_k)))
    return CheckReport(check="h_vanishes_on_ray", params={"samples": samples, "seed": seed},
                       value=worst, bound=1e-12, status=_status(worst <= 1e-12))


def check_G_primitives(a: float, step: float = 1e-6) -> CheckReport:
    """∂_y G± = h(y, B ± ay)，∂_B G± 的闭式与差分一致"""
    p = SlopeParam(a)
    y = np.linspace(-20.0, 20.0, 801)
    y = y[np.abs(y) > 0.05]
    worst = 0.0
    for B in (0.5, 1.0, 2.0):
        for G, dB, sign in ((G_plus, dB_G_plus, 1.0), (G_minus, dB_G_minus, -1.0)):
            dy = (np.asarray(G(p, B, y + step)) - np.asarray(G(p, B, y - step))) / (2.0 * step)
            exact_y = np.asarray(h_kernel(p, y, B + sign * p.a * y))
            d_b = (np.asarray(G(p, B + step, y)) - np.asarray(G(p, B - step, y))) / (2.0 * step)
            exact_b = np.asarray(dB(p, B, y))
            for fd, exact in ((dy, exact_y), (d_b, exact_b)):
                worst = max(worst, float(np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact)))))
    return CheckReport(check="G_primitive_derivatives", params={"a": p.a}, value=worst, bound=1e-6,
                       status=_status(worst <= 1e-6))


def check_lambda_ordering(samples: int = 10000, seed: int = 0) -> CheckReport:
    """0 ≤ λ ≤ λ̃ 对非负高度成立"""
    rng = np.random.default_rng(seed)
    a_h = rng.uniform(0.0, 2.0, samples)
    b_h = rng.uniform(0.0, 2.0, samples)
    c = rng.uniform(-5.0, 5.0, samples)
    lam = np.asarray(lambda_rate(a_h, b_h, c))
    tilde = np.asarray(tilde_lambda_rate(a_h, b_h, c))
    worst_gap = float(np.min(tilde - lam))
    worst_low = float(np.min(lam))
    ok = worst_gap >= -1e-15 and worst_low >= 0.0
    return CheckReport(check="lambda_ordering", params={"samples": samples, "seed": seed},
                       value=worst_gap, bound=0.0, status=_status(ok),
                       detail={"min_lambda": worst_low})


def check_arctan_identity(step: float = 1e-6) -> CheckReport:
    """σ 对被积函数 = d/dx arctan((f(x) + σf(x−y))/y)，中心差分"""
    def f(x):
        return 0.4 + 0.15 * np.sin(2.0 * np.pi * x) + 0.05 * np.cos(6.0 * np.pi * x)

    def fx(x):
        return 0.3 * np.pi * np.cos(2.0 * np.pi * x) - 0.3 * np.pi * np.sin(6.0 * np.pi * x)

    x = np.linspace(0.0, 1.0, 41)[:, None]
    y = np.concatenate([np.linspace(-3.0, -0.05, 30), np.linspace(0.05, 3.0, 30)])[None, :]
    worst = 0.0
    for sigma in (1, -1):
        def phase(xx):
            return np.arctan((f(xx) + sigma * f(xx - y)) / y)
        fd = (phase(x + step) - phase(x - step)) / (2.0 * step)
        exact = np.asarray(integrand_pair(np.broadcast_to(y, fd.shape), fx(x), fx(x - y), f(x),
                                          f(x - y), sigma))
        worst = max(worst, float(np.max(np.abs(fd - exact))))
    return CheckReport(check="arctan_identity", params={"points": int(x.size * y.size)},
                       value=worst, bound=1e-6, status=_status(worst <= 1e-6))


def check_periodized_kernels(nu: float = 1.0, images: int = 200000) -> CheckReport:
    """闭式周期化核与截断镜像和一致"""
    n = np.arange(-images, images + 1) * nu
    worst = 0.0
    for y in (0.1, 0.37, -0.25):
        for d in (0.05, 0.3, 1.2):
            shifted = y + n
            den = shifted * shifted + d * d
            worst = max(worst,
                        abs(periodized_kernel(y, d, nu) - float(np.sum(shifted / den))),
                        abs(periodized_poisson_kernel(y, d, nu) - float(np.sum(d / den))))
    return CheckReport(check="periodized_kernels", params={"nu": nu, "images": images},
                       value=worst, bound=1e-4, status=_status(worst <= 1e-4))


def check_log_kernel_tail() -> CheckReport:
    """∫_{u0}^∞ ln(1 + C²/u²) du 闭式与求积一致"""
    worst = 0.0
    for C in (0.1, 1.0, 3.0):
        for u0 in (0.5, 2.0, 10.0):
            value, _ = quad(lambda u: math.log1p((C / u) ** 2), u0, np.inf, epsabs=1e-13, epsrel=1e-11)
            worst = max(worst, abs(value - log_kernel_tail(C, u0)))
    return CheckReport(check="log_kernel_tail", value=worst, bound=1e-8, status=_status(worst <= 1e-8))


# ---------------------------------------------------------------------------
# 变分套件
# ---------------------------------------------------------------------------

def check_g_structure(a: float) -> List[CheckReport]:
    """g(0) = −A 精确成立；g′ 恰有四个零点且符号模式正确"""
    p = SlopeParam(a)
    g0 = g_fun(p, 0.0)
    reports = [CheckReport(check="g_at_zero", params={"a": p.a}, value=g0, bound=-p.A,
                           status=_status(g0 == -p.A))]
    try:
        roots = g_extrema(p)
        reports.append(CheckReport(check="g_extrema", params={"a": p.a}, value=4, bound=4,
                                   detail={"roots": list(roots),
                                           "values": [g_fun(p, s) for s in roots]}))
    except VariationalError as e:
        reports.append(CheckReport(check="g_extrema", params={"a": p.a}, status=STATUS_FAIL,
                                   detail={"error": str(e), "log": [repr(x) for x in e.log]}))
    reports.append(verify_g_below_minus_a(p))
    return reports


def check_interval_inequality(a: float) -> List[CheckReport]:
    b = np.linspace(-a, a, 20, endpoint=False)
    s0 = np.linspace(-10.0, -0.01, 20)
    return [verify_interval_inequality(a, b, s0)]


def check_boundary_integral(a: float, points: int = 100) -> List[CheckReport]:
    """p ∈ (0, 1/a) 上闭式为负且低于给定界，求积与闭式一致"""
    ps = (1.0 / a) * (np.arange(points) + 0.5) / points
    worst_sign = -math.inf
    worst_bound = -math.inf
    worst_quad = 0.0
    for p_value in ps:
        r = boundary_integral(a, p_value)
        worst_sign = max(worst_sign, r.closed_form)
        worst_bound = max(worst_bound, r.closed_form - r.bound)
        worst_quad = max(worst_quad, abs(r.quadrature - r.closed_form / (2.0 * a)))
    ok = worst_sign < 0.0 and worst_bound < 0.0 and worst_quad <= 1e-4
    return [CheckReport(check="boundary_integral_negative", params={"a": a, "points": points},
                        value=worst_sign, bound=0.0, status=_status(ok),
                        detail={"max_closed_minus_bound": worst_bound,
                                "max_quadrature_mismatch": worst_quad})]


def check_zero_identity(a: float) -> List[CheckReport]:
    r = zero_identity_integral(a)
    ok = abs(r.closed_form) <= 1e-12 and abs(r.quadrature) <= 1e-4
    return [CheckReport(check="zero_identity", params={"a": a}, value=r.closed_form, bound=1e-12,
                        status=_status(ok),
                        detail={"quadrature": r.quadrature, "quadrature_error": r.quadrature_error})]


def check_tent(a: float) -> List[CheckReport]:
    """两侧 tent 的 H 为 0；H⁺(tent) 闭式与分段精确值一致"""
    reports = [verify_tent_identity(a, Y=100.0 / a, M=2000)]
    exact = H_plus(a, tent_candidate(a, 10.0 / a, 1000))
    closed = H_plus_tent(a)
    mismatch = abs(exact - closed)
    reports.append(CheckReport(check="tent_H_plus_closed_form", params={"a": a}, value=exact,
                               bound=closed, status=_status(mismatch <= 1e-9),
                               detail={"mismatch": mismatch}))
    reports.append(verify_flat_continuation(a))
    reports.append(verify_tent_primitive(a))
    return reports


def check_minimizer(a: float, M: int, tol: float, seed: int) -> List[CheckReport]:
    """多起点极小化：每个起点都收敛到 tent 附近，且没有低于 H⁺(tent) − 1e−4 的值"""
    params = {"a": a, "M": M, "tol": tol, "starts": list(START_BUILDERS)}
    target = H_plus_tent(a)
    try:
        result = minimize_H_plus(a, M=M, tol=tol, seed=seed)
    except VariationalError as e:
        return [CheckReport(check="H_plus_minimizer", params=params, status=STATUS_FAIL,
                            detail={"error": str(e)})]
    distances = {o.start: o.distance_to_tent for o in result.outcomes}
    lowest = min(o.value for o in result.outcomes)
    ok = all(d <= tol for d in distances.values()) and lowest >= target - 1e-4
    return [CheckReport(check="H_plus_minimizer", params=params, value=max(distances.values()),
                        bound=tol, status=_status(ok),
                        detail={"distances": distances, "lowest_value": lowest,
                                "tent_value": target, "best_start": result.start})]


# ---------------------------------------------------------------------------
# 服务
# ---------------------------------------------------------------------------

def _run_item(item: CheckItem) -> List[CheckReport]:
    name, fn = item
    try:
        return fn()
    except (MuskatError, ValueError, ArithmeticError) as e:
        logger.error(f"验证项 {name} 抛出异常: {type(e).__name__}: {e}")
        return [CheckReport(check=name, status=STATUS_FAIL,
                            detail={"error": f"{type(e).__name__}: {e}"})]


class VerificationServiceInterface(ABC):
    """验证服务抽象接口"""

    @abstractmethod
    def run(self, settings: VerifySettings) -> List[CheckReport]:
        """执行所选套件，按固定顺序返回全部报告"""
        pass


class VerificationService(VerificationServiceInterface):
    """验证服务实现"""

    def build_items(self, settings: VerifySettings) -> List[CheckItem]:
        items: List[CheckItem] = []
        a_values: Sequence[float] = settings.a_values
        seed = settings.seed
        if settings.runs_kernels:
            items.append(("h_vanishes_on_ray", lambda: [check_h_vanishes_on_ray(seed=seed)]))
            items.append(("h_nonnegative",
                          lambda: [check_h_nonneg(sorted(set(a_values) | {1.0}),
                                                  settings.h_samples, seed)]))
            items.append(("lambda_ordering", lambda: [check_lambda_ordering(seed=seed)]))
            items.append(("arctan_identity", lambda: [check_arctan_identity()]))
            items.append(("periodized_kernels", lambda: [check_periodized_kernels()]))
            items.append(("log_kernel_tail", lambda: [check_log_kernel_tail()]))
            for a in a_values:
                items.append((f"G_primitive_derivatives[a={a}]", lambda a=a: [check_G_primitives(a)]))
        if settings.runs_variational:
            for a in a_values:
                items.append((f"g_structure[a={a}]", lambda a=a: check_g_structure(a)))
                items.append((f"g_interval_inequality[a={a}]", lambda a=a: check_interval_inequality(a)))
                items.append((f"boundary_integral[a={a}]", lambda a=a: check_boundary_integral(a)))
                items.append((f"zero_identity[a={a}]", lambda a=a: check_zero_identity(a)))
                items.append((f"tent[a={a}]", lambda a=a: check_tent(a)))
                items.append((f"H_plus_minimizer[a={a}]",
                              lambda a=a: check_minimizer(a, settings.minimizer_m,
                                                          settings.minimizer_tol, seed)))
        return items

    def run(self, settings: VerifySettings,
            executor: Optional[BoundedExecutor] = None) -> List[CheckReport]:
        items = self.build_items(settings)
        logger.info("=== 验证开始 ===")
        logger.info(f"套件: {settings.suite}, a={list(settings.a_values)}, 检查项={len(items)}")
        if executor is not None:
            nested = executor.map_ordered(_run_item, items)
        elif settings.workers > 1:
            with BoundedExecutor(max_workers=settings.workers) as pool:
                nested = pool.map_ordered(_run_item, items)
        else:
            nested = [_run_item(item) for item in items]
        reports = [r for group in nested for r in group]
        failed = [r.check for r in reports if r.applicable and not r.passed]
        if failed:
            logger.warning(f"=== 验证未通过: {failed} ===")
        else:
            logger.info(f"=== 验证通过: {len(reports)} 项 ===")
        return reports
