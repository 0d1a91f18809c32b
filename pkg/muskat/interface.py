"""
界面网格表示
均匀网格上的界面高度采样，提供求导、范数、Hölder 半范数与快照序列化
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import correlate1d

from .exceptions import ProfileError

logger = logging.getLogger(__name__)

FAR_FIELD_FRACTION = 0.1
FAR_FIELD_TOL = 1e-12


class PlaneKind(Enum):
    HALF = "HalfPlane"
    WHOLE = "WholePlane"


class BoundaryKind(Enum):
    PERIODIC = "Periodic"
    ASYMPTOTIC = "Asymptotic"


@dataclass(frozen=True)
class DomainSpec:
    """几何描述：半平面/全平面 × 周期(ν)/渐近(ψ∞, X)"""
    plane_kind: PlaneKind
    boundary_kind: BoundaryKind
    period: Optional[float] = None
    psi_inf: float = 0.0
    half_width: Optional[float] = None

    def __post_init__(self):
        if self.boundary_kind is BoundaryKind.PERIODIC:
            if self.period is None or not self.period > 0 or not np.isfinite(self.period):
                raise ProfileError(f"periodic domain requires period ν > 0, got {self.period!r}")
        else:
            if self.half_width is None or not self.half_width > 0 or not np.isfinite(self.half_width):
                raise ProfileError(f"asymptotic domain requires half-width X > 0, got {self.half_width!r}")
            if not np.isfinite(self.psi_inf):
                raise ProfileError("far-field value ψ∞ must be finite")
            if self.plane_kind is PlaneKind.HALF and self.psi_inf < 0:
                raise ProfileError(f"half-plane requires ψ∞ ≥ 0, got {self.psi_inf!r}")

    @classmethod
    def periodic(cls, nu: float, plane_kind: PlaneKind = PlaneKind.HALF) -> "DomainSpec":
        return cls(plane_kind=plane_kind, boundary_kind=BoundaryKind.PERIODIC, period=float(nu))

    @classmethod
    def asymptotic(cls, psi_inf: float, half_width: float,
                   plane_kind: PlaneKind = PlaneKind.HALF) -> "DomainSpec":
        return cls(plane_kind=plane_kind, boundary_kind=BoundaryKind.ASYMPTOTIC,
                   psi_inf=float(psi_inf), half_width=float(half_width))

    @property
    def is_periodic(self) -> bool:
        return self.boundary_kind is BoundaryKind.PERIODIC

    @property
    def is_half_plane(self) -> bool:
        return self.plane_kind is PlaneKind.HALF

    @property
    def reference_level(self) -> float:
        """质量/能量的参考高度：周期模式为 0，渐近模式为 ψ∞"""
        return 0.0 if self.is_periodic else self.psi_inf

    def spacing(self, n: int) -> float:
        if self.is_periodic:
            return self.period / n
        return 2.0 * self.half_width / n

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "plane_kind": self.plane_kind.value,
            "boundary_kind": self.boundary_kind.value,
        }
        if self.is_periodic:
            out["period"] = self.period
        else:
            out["psi_inf"] = self.psi_inf
            out["half_width"] = self.half_width
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DomainSpec":
        try:
            plane = PlaneKind(data["plane_kind"])
            boundary = BoundaryKind(data["boundary_kind"])
        except (KeyError, ValueError) as e:
            raise ProfileError(f"invalid domain descriptor: {data!r}") from e
        if boundary is BoundaryKind.PERIODIC:
            return cls.periodic(float(data["period"]), plane)
        return cls.asymptotic(float(data["psi_inf"]), float(data["half_width"]), plane)


def grid_points(domain: DomainSpec, n: int) -> np.ndarray:
    """周期：x_i = i·ν/N；渐近：x_i = −X + i·dx（写成 (i − N/2)·dx，使 x_{N/2} = 0 精确成立）"""
    dx = domain.spacing(n)
    if domain.is_periodic:
        return np.arange(n) * dx
    return (np.arange(n) - n // 2) * dx


@dataclass(frozen=True)
class InterfaceProfile:
    """界面高度 f 在均匀网格上的不可变采样"""
    domain: DomainSpec
    samples: np.ndarray
    _cache: Dict[Any, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.samples, dtype=float, copy=True).reshape(-1)
        n = values.size
        if n < 2:
            raise ProfileError(f"profile needs at least 2 samples, got {n}")
        if self.domain.is_periodic and (n & (n - 1)) != 0:
            raise ProfileError(f"periodic grid size must be a power of two, got {n}")
        if not self.domain.is_periodic and n % 2 != 0:
            raise ProfileError(f"asymptotic grid size must be even, got {n}")
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise ProfileError(f"non-finite sample at index {int(bad[0])}")
        if self.domain.is_half_plane:
            neg = np.flatnonzero(values < 0.0)
            if neg.size:
                raise ProfileError(
                    f"half-plane profile has negative sample {values[neg[0]]!r} at index {int(neg[0])}")
        values.flags.writeable = False
        object.__setattr__(self, 'samples', values)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def dx(self) -> float:
        return self.domain.spacing(self.n)

    @property
    def x(self) -> np.ndarray:
        return grid_points(self.domain, self.n)

    def check_far_field(self, tol: float = FAR_FIELD_TOL) -> None:
        """渐近模式：外侧 10% 网格上必须等于 ψ∞（ψ − ψ∞ 紧支）"""
        if self.domain.is_periodic:
            return
        x = self.x
        outer = np.abs(x) >= (1.0 - FAR_FIELD_FRACTION) * self.domain.half_width
        dev = np.abs(self.samples[outer] - self.domain.psi_inf)
        if dev.size and dev.max() > tol:
            raise ProfileError(
                f"asymptotic profile deviates from ψ∞ by {dev.max():.3e} on the outer grid")

    def with_samples(self, samples: np.ndarray) -> "InterfaceProfile":
        return InterfaceProfile(self.domain, samples)


# ---------------------------------------------------------------------------
# 求导
# ---------------------------------------------------------------------------

# 四阶中心差分模板（correlate1d 顺序，偏移从 −k 到 +k）
_FD_STENCILS = {
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 1),
    2: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, 2),
    3: (np.array([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]) / 8.0, 3),
}


def _spectral_derivative(values: np.ndarray, period: float, order: int) -> np.ndarray:
    n = values.size
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=period / n)
    coeffs = np.fft.rfft(values) * (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        coeffs[-1] = 0.0
    return np.fft.irfft(coeffs, n=n)


def grid_derivative(values: np.ndarray, domain: DomainSpec, order: int) -> np.ndarray:
    """对原始采样数组求导（RK 中间级的采样不构造 InterfaceProfile）"""
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order!r}")
    n = values.size
    if n < 8:
        raise ProfileError(f"derivative needs N ≥ 8, got {n}")
    if domain.is_periodic:
        return _spectral_derivative(values, domain.period, order)
    weights, power = _FD_STENCILS[order]
    return correlate1d(values, weights, mode='nearest') / domain.spacing(n) ** power


def derivative(profile: InterfaceProfile, order: int) -> np.ndarray:
    """f_x / f_xx / f_xxx：周期用 FFT 谱求导，渐近用四阶差分 + 常数延拓"""
    cached = profile._cache.get(("d", order))
    if cached is not None:
        return cached
    out = grid_derivative(profile.samples, profile.domain, order)
    out.flags.writeable = False
    profile._cache[("d", order)] = out
    return out


# ---------------------------------------------------------------------------
# 范数与监控量
# ---------------------------------------------------------------------------

def max_slope(profile: InterfaceProfile) -> float:
    return float(np.max(np.abs(derivative(profile, 1))))


def sup_norm(profile: InterfaceProfile) -> float:
    return float(np.max(profile.samples))


def min_height(profile: InterfaceProfile) -> float:
    return float(np.min(profile.samples))


def _excess(profile: InterfaceProfile) -> np.ndarray:
    return profile.samples - profile.domain.reference_level


def l1_mass(profile: InterfaceProfile) -> float:
    """周期：∫₀^ν f；渐近：∫(f − ψ∞)（复合梯形）"""
    excess = _excess(profile)
    if profile.domain.is_periodic:
        return float(np.sum(excess) * profile.dx)
    return float(trapezoid(excess, dx=profile.dx))


def l2_energy(profile: InterfaceProfile) -> float:
    """周期：∫₀^ν f²；渐近：‖f − ψ∞‖²"""
    excess = _excess(profile)
    if profile.domain.is_periodic:
        return float(np.sum(excess * excess) * profile.dx)
    return float(trapezoid(excess * excess, dx=profile.dx))


def holder_seminorm(values: np.ndarray, dx: float, gamma: float,
                    period: Optional[float] = None) -> float:
    """max |v_i − v_j| / |x_i − x_j|^γ，只取间距 ≥ dx 的点对；给定 period 时用周期距离"""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"Hölder exponent must lie in (0, 1], got {gamma!r}")
    v = np.asarray(values, dtype=float)
    n = v.size
    idx = np.arange(n)
    best = 0.0
    for start in range(0, n, 256):
        rows = idx[start:start + 256]
        sep = np.abs(rows[:, None] - idx[None, :]).astype(float) * dx
        if period is not None:
            sep = np.minimum(sep, period - sep)
        valid = sep >= dx * (1.0 - 1e-12)
        diff = np.abs(v[rows][:, None] - v[None, :])
        with np.errstate(divide='ignore', invalid='ignore'):
            quotient = np.where(valid, diff / np.where(valid, sep, 1.0) ** gamma, 0.0)
        best = max(best, float(quotient.max()))
    return best


def holder_seminorm_fxx(profile: InterfaceProfile, gamma_prime: float) -> float:
    """‖f_xx‖ 的 Ċ^{γ′} 半范数（网格版本）"""
    period = profile.domain.period if profile.domain.is_periodic else None
    return holder_seminorm(derivative(profile, 2), profile.dx, gamma_prime, period)


# ---------------------------------------------------------------------------
# 快照
# ---------------------------------------------------------------------------

def to_snapshot(profile: InterfaceProfile, t: float) -> Dict[str, Any]:
    """{t, domain, N, dx, samples}；json 以 repr 输出浮点，往返逐位一致"""
    return {
        "t": float(t),
        "domain": profile.domain.to_dict(),
        "N": profile.n,
        "dx": profile.dx,
        "samples": profile.samples.tolist(),
    }


def from_snapshot(data: Dict[str, Any]) -> "tuple[float, InterfaceProfile]":
    try:
        domain = DomainSpec.from_dict(data["domain"])
        samples = np.asarray(data["samples"], dtype=float)
        t = float(data["t"])
        n = int(data["N"])
    except (KeyError, TypeError, ValueError) as e:
        raise ProfileError(f"malformed snapshot: {e}") from e
    if samples.size != n:
        raise ProfileError(f"snapshot declares N={n} but holds {samples.size} samples")
    return t, InterfaceProfile(domain, samples)


__all__ = [
    "PlaneKind",
    "BoundaryKind",
    "DomainSpec",
    "InterfaceProfile",
    "grid_points",
    "grid_derivative",
    "derivative",
    "max_slope",
    "sup_norm",
    "min_height",
    "l1_mass",
    "l2_energy",
    "holder_seminorm",
    "holder_seminorm_fxx",
    "to_snapshot",
    "from_snapshot",
]
