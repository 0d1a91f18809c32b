"""
闭式核函数
界面方程积分核、耗散率、h_a 及其原函数等纯标量函数，全部支持 numpy 数组广播
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from .exceptions import KernelPoleError, NonFiniteInputError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _finite(name: str, *values) -> None:
    for v in values:
        if not np.all(np.isfinite(v)):
            raise NonFiniteInputError(f"{name}: non-finite input")


def _out(value):
    """标量输入返回 float，数组输入原样返回"""
    if np.ndim(value) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class SlopeParam:
    """斜率参数 a ∈ (0, 1]，A = 1/a − a 只在这里计算一次"""
    a: float
    A: float = field(init=False)

    def __post_init__(self):
        a = float(self.a)
        if not np.isfinite(a) or a <= 0.0 or a > 1.0:
            raise ValueError(f"slope parameter a must lie in (0, 1], got {self.a!r}")
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'A', 1.0 / a - a)


# ---------------------------------------------------------------------------
# 界面方程被积函数
# ---------------------------------------------------------------------------

def integrand_pair(y: ArrayLike, fx0: ArrayLike, fxy: ArrayLike, f0: ArrayLike,
                   fy: ArrayLike, sigma: int) -> ArrayLike:
    """y·(f_x(x) + σ f_x(x−y)) / (y² + (f(x) + σ f(x−y))²)

    y = 0 处约定返回 0，极限值由 evolution 层按 f_xx 补上。
    """
    if sigma not in (1, -1):
        raise ValueError(f"sigma must be +1 or -1, got {sigma!r}")
    _finite("integrand_pair", y, fx0, fxy, f0, fy)
    y = np.asarray(y, dtype=float)
    d = np.asarray(f0, dtype=float) + sigma * np.asarray(fy, dtype=float)
    num = y * (np.asarray(fx0, dtype=float) + sigma * np.asarray(fxy, dtype=float))
    den = y * y + d * d
    at_origin = (y == 0.0)
    safe = np.where(at_origin, 1.0, den)
    return _out(np.where(at_origin, 0.0, num / safe))


def _reduce_period(y: np.ndarray, nu: float) -> np.ndarray:
    """y 约化到 [−ν/2, ν/2]；ν 的整数倍精确落到 0"""
    return y - nu * np.round(y / nu)


def periodized_kernel(y: ArrayLike, d: ArrayLike, nu: float) -> ArrayLike:
    """Σ_n (y+nν)/((y+nν)² + d²) 的闭式（对称求和）

    (π/ν)·sin(2πy/ν) / (cosh(2πd/ν) − cos(2πy/ν))，分母写成
    2sinh²(πd/ν) + 2sin²(πy/ν) 以避免相消。
    """
    if not nu > 0:
        raise ValueError(f"period must be positive, got {nu!r}")
    _finite("periodized_kernel", y, d)
    y = _reduce_period(np.asarray(y, dtype=float), nu)
    d = np.asarray(d, dtype=float)
    w = np.pi / nu
    with np.errstate(over='ignore'):
        den = 2.0 * np.sinh(w * d) ** 2 + 2.0 * np.sin(w * y) ** 2
    if np.any(den == 0.0):
        raise KernelPoleError("periodized_kernel", "(y ≡ 0 mod ν, d = 0)")
    return _out(w * np.sin(2.0 * w * y) / den)


def periodized_poisson_kernel(y: ArrayLike, d: ArrayLike, nu: float) -> ArrayLike:
    """Σ_n d/((y+nν)² + d²) = (π/ν)·sinh(2πd/ν) / (cosh(2πd/ν) − cos(2πy/ν))"""
    if not nu > 0:
        raise ValueError(f"period must be positive, got {nu!r}")
    _finite("periodized_poisson_kernel", y, d)
    y = _reduce_period(np.asarray(y, dtype=float), nu)
    d = np.asarray(d, dtype=float)
    w = np.pi / nu
    with np.errstate(over='ignore', invalid='ignore'):
        s = np.sinh(w * d)
        den = 2.0 * s ** 2 + 2.0 * np.sin(w * y) ** 2
        if np.any(den == 0.0):
            raise KernelPoleError("periodized_poisson_kernel", "(y ≡ 0 mod ν, d = 0)")
        # sinh(2u)/(2sinh²u + ...) → sign(d) 当 |d| 很大
        value = np.where(np.isinf(s), np.sign(d), 2.0 * s * np.cosh(w * d) / den)
    return _out(w * value)


# ---------------------------------------------------------------------------
# h_a 及相关函数
# ---------------------------------------------------------------------------

def h_kernel(p: SlopeParam, y: ArrayLike, r: ArrayLike) -> ArrayLike:
    """h(y, r) = (y² − r² − A·y·r) / (y² + r²)²"""
    _finite("h_kernel", y, r)
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    den = y * y + r * r
    if np.any(den == 0.0):
        raise KernelPoleError("h_kernel", "(y, r) = (0, 0)")
    return _out((y * y - r * r - p.A * y * r) / (den * den))


def h_r(p: SlopeParam, y: ArrayLike, r: ArrayLike) -> ArrayLike:
    """∂_r h(y, r) = g(r/y)/y³，直接用多项式形式求值"""
    _finite("h_r", y, r)
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    den = y * y + r * r
    if np.any(den == 0.0):
        raise KernelPoleError("h_r", "(y, r) = (0, 0)")
    num = 2 * r ** 3 + 3 * p.A * y * r ** 2 - 6 * y * y * r - p.A * y ** 3
    return _out(num / den ** 3)


def g_fun(p: SlopeParam, s: ArrayLike) -> ArrayLike:
    """g(s) = (2s³ + 3As² − 6s − A) / (1 + s²)³"""
    _finite("g_fun", s)
    s = np.asarray(s, dtype=float)
    return _out((2 * s ** 3 + 3 * p.A * s ** 2 - 6 * s - p.A) / (1 + s * s) ** 3)


def g_prime_numerator(p: SlopeParam, s: ArrayLike) -> ArrayLike:
    """g′ 的分子 s⁴ + 2As³ − 6s² − 2As + 1（符号与 −g′ 相同）"""
    s = np.asarray(s, dtype=float)
    return _out(s ** 4 + 2 * p.A * s ** 3 - 6 * s ** 2 - 2 * p.A * s + 1)


def g_prime(p: SlopeParam, s: ArrayLike) -> ArrayLike:
    """g′(s) = −6(s⁴ + 2As³ − 6s² − 2As + 1) / (1 + s²)⁴"""
    _finite("g_prime", s)
    s = np.asarray(s, dtype=float)
    return _out(-6.0 * np.asarray(g_prime_numerator(p, s)) / (1 + s * s) ** 4)


def lambda_rate(a_h: ArrayLike, b_h: ArrayLike, c: ArrayLike) -> ArrayLike:
    """λ(a, b, c) = (a+b)²(a−b)² / (2[c² + (a+b)²][c² + (a−b)²])，(a−b)² = 0 时取 0"""
    _finite("lambda_rate", a_h, b_h, c)
    a_h = np.asarray(a_h, dtype=float)
    b_h = np.asarray(b_h, dtype=float)
    c = np.asarray(c, dtype=float)
    sp = (a_h + b_h) ** 2
    sm = (a_h - b_h) ** 2
    num = sp * sm
    den = 2.0 * (c * c + sp) * (c * c + sm)
    return _out(np.where(num == 0.0, 0.0, num / np.where(den == 0.0, 1.0, den)))


def tilde_lambda_rate(a_h: ArrayLike, b_h: ArrayLike, c: ArrayLike) -> ArrayLike:
    """λ̃(a, b, c) = (a+b)²(a−b)² / ([c² + 2a² + 2b²][c² + (a−b)²])"""
    _finite("tilde_lambda_rate", a_h, b_h, c)
    a_h = np.asarray(a_h, dtype=float)
    b_h = np.asarray(b_h, dtype=float)
    c = np.asarray(c, dtype=float)
    sm = (a_h - b_h) ** 2
    num = (a_h + b_h) ** 2 * sm
    den = (c * c + 2 * a_h * a_h + 2 * b_h * b_h) * (c * c + sm)
    return _out(np.where(num == 0.0, 0.0, num / np.where(den == 0.0, 1.0, den)))


# ---------------------------------------------------------------------------
# 沿直线 r = B + c·y 的 y-原函数
# ---------------------------------------------------------------------------

def _primitive_coefficients(p: SlopeParam, B, c):
    k = 1.0 / (1.0 + c * c)
    alpha = (c * c + p.A * c - 1.0) * k
    beta = B * (2.0 * c + p.A) * 0.5 * k
    return alpha, beta


def linear_primitive(p: SlopeParam, B: ArrayLike, c: ArrayLike, y: ArrayLike) -> ArrayLike:
    """Φ(y) = (αy + β)/(y² + (B + cy)²)，满足 dΦ/dy = h(y, B + cy)

    α = (c² + Ac − 1)/(1 + c²)，β = B(2c + A)/(2(1 + c²))；c = a 时即 G⁺。
    y = ±inf 时返回 0。
    """
    B = np.asarray(B, dtype=float)
    c = np.asarray(c, dtype=float)
    y = np.asarray(y, dtype=float)
    _finite("linear_primitive", B, c)
    alpha, beta = _primitive_coefficients(p, B, c)
    infinite = np.isinf(y)
    yf = np.where(infinite, 0.0, y)
    r = B + c * yf
    den = yf * yf + r * r
    if np.any((den == 0.0) & ~infinite):
        raise KernelPoleError("linear_primitive", "(y, B + cy) = (0, 0)")
    safe = np.where(den == 0.0, 1.0, den)
    return _out(np.where(infinite, 0.0, (alpha * yf + beta) / safe))


def linear_primitive_grad(p: SlopeParam, B: ArrayLike, c: ArrayLike,
                          y: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """(∂Φ/∂B, ∂Φ/∂c)，用于 H⁺ 的解析梯度"""
    B = np.asarray(B, dtype=float)
    c = np.asarray(c, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha, beta = _primitive_coefficients(p, B, c)
    q = 1.0 + c * c
    dbeta_dB = (2.0 * c + p.A) / (2.0 * q)
    dalpha_dc = (4.0 * c + p.A - p.A * c * c) / (q * q)
    dbeta_dc = B * (1.0 - c * c - p.A * c) / (q * q)
    infinite = np.isinf(y)
    yf = np.where(infinite, 0.0, y)
    r = B + c * yf
    den = yf * yf + r * r
    if np.any((den == 0.0) & ~infinite):
        raise KernelPoleError("linear_primitive_grad", "(y, B + cy) = (0, 0)")
    safe = np.where(den == 0.0, 1.0, den)
    top = alpha * yf + beta
    d_b = (dbeta_dB * safe - top * 2.0 * r) / (safe * safe)
    d_c = ((dalpha_dc * yf + dbeta_dc) * safe - top * 2.0 * r * yf) / (safe * safe)
    return _out(np.where(infinite, 0.0, d_b)), _out(np.where(infinite, 0.0, d_c))


def G_plus(p: SlopeParam, B: ArrayLike, y: ArrayLike) -> ArrayLike:
    """G⁺ = B / (2a(y² + (B + ay)²))"""
    _finite("G_plus", B, y)
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    den = y * y + (B + p.a * y) ** 2
    if np.any(den == 0.0):
        raise KernelPoleError("G_plus", "(y, B + ay) = (0, 0)")
    return _out(B / (2.0 * p.a * den))


def G_minus(p: SlopeParam, B: ArrayLike, y: ArrayLike) -> ArrayLike:
    """G⁻ = (1−3a²)/(2a(1+a²))·B/D − 2(1−a²)/(1+a²)·y/D，D = y² + (B − ay)²"""
    _finite("G_minus", B, y)
    a = p.a
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    den = y * y + (B - a * y) ** 2
    if np.any(den == 0.0):
        raise KernelPoleError("G_minus", "(y, B − ay) = (0, 0)")
    c1 = (1 - 3 * a * a) / (2 * a * (1 + a * a))
    c2 = 2 * (1 - a * a) / (1 + a * a)
    return _out((c1 * B - c2 * y) / den)


def dB_G_plus(p: SlopeParam, B: ArrayLike, y: ArrayLike) -> ArrayLike:
    """∂_B G⁺ = ((1+a²)y² − B²) / (2a[y² + (B + ay)²]²)"""
    _finite("dB_G_plus", B, y)
    a = p.a
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    den = y * y + (B + a * y) ** 2
    if np.any(den == 0.0):
        raise KernelPoleError("dB_G_plus", "(y, B + ay) = (0, 0)")
    return _out(((1 + a * a) * y * y - B * B) / (2 * a * den * den))


def dB_G_minus(p: SlopeParam, B: ArrayLike, y: ArrayLike) -> ArrayLike:
    """∂_B G⁻ = ((3a²−1)B² + 8a(1−a²)yB + (1−10a²+5a⁴)y²) / (2a(1+a²)[y² + (B − ay)²]²)"""
    _finite("dB_G_minus", B, y)
    a = p.a
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    den = y * y + (B - a * y) ** 2
    if np.any(den == 0.0):
        raise KernelPoleError("dB_G_minus", "(y, B − ay) = (0, 0)")
    num = ((3 * a * a - 1) * B * B + 8 * a * (1 - a * a) * y * B
           + (1 - 10 * a * a + 5 * a ** 4) * y * y)
    return _out(num / (2 * a * (1 + a * a) * den * den))


def tent_primitive(p: SlopeParam, y: ArrayLike) -> ArrayLike:
    """(1 − 3a² − 2a(1−a²)y) / (y² + (2 − ay)²)，其导数为 a(1+a²)·h(y, 2 − ay)"""
    a = p.a
    y = np.asarray(y, dtype=float)
    return _out((1 - 3 * a * a - 2 * a * (1 - a * a) * y) / (y * y + (2 - a * y) ** 2))


# ---------------------------------------------------------------------------
# arctan / 对数核
# ---------------------------------------------------------------------------

def arctan_primitive(s: ArrayLike) -> ArrayLike:
    """∫₀^s arctan r dr = s·arctan s − ln√(1 + s²)"""
    _finite("arctan_primitive", s)
    s = np.asarray(s, dtype=float)
    return _out(s * np.arctan(s) - 0.5 * np.log1p(s * s))


def log_kernel(c: ArrayLike, d: ArrayLike) -> ArrayLike:
    """ln(1 + d²/c²)，c ≠ 0"""
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(c == 0.0):
        raise KernelPoleError("log_kernel", "c = 0")
    return _out(np.log1p((d / c) ** 2))


def log_kernel_tail(C: ArrayLike, u0: ArrayLike) -> ArrayLike:
    """∫_{u0}^∞ ln(1 + C²/u²) du = 2C·arctan(C/u0) − u0·ln(1 + C²/u0²)，u0 > 0"""
    C = np.abs(np.asarray(C, dtype=float))
    u0 = np.asarray(u0, dtype=float)
    if np.any(u0 <= 0.0):
        raise ValueError("log_kernel_tail requires u0 > 0")
    return _out(2.0 * C * np.arctan(C / u0) - u0 * np.log1p((C / u0) ** 2))


__all__ = [
    "SlopeParam",
    "integrand_pair",
    "periodized_kernel",
    "periodized_poisson_kernel",
    "h_kernel",
    "h_r",
    "g_fun",
    "g_prime",
    "g_prime_numerator",
    "lambda_rate",
    "tilde_lambda_rate",
    "linear_primitive",
    "linear_primitive_grad",
    "G_plus",
    "G_minus",
    "dB_G_plus",
    "dB_G_minus",
    "tent_primitive",
    "arctan_primitive",
    "log_kernel",
    "log_kernel_tail",
]
