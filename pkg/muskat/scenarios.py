"""
初值模板
周期触底凸包、常数背景上的局部凹陷、全平面图像和常数界面
"""

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from .exceptions import ScenarioError
from .interface import DomainSpec, InterfaceProfile, PlaneKind, grid_points

logger = logging.getLogger(__name__)

HALF_PLANE_SLOPE_BOUND = 0.3
PLANE_SLOPE_BOUND = 1.0
_SLOPE_EPS = 1e-12

# cos⁴ 衰减的最大斜率系数：max |d/dx cos⁴(πx/(2w))| = 3√3π/(8w)，在 |x| = w/3 处取到
_COS4_SLOPE = 3.0 * math.sqrt(3.0) * math.pi / 8.0


class SlopeWarning(UserWarning):
    """全平面斜率超过 1，斜率极大值原理不再保证"""
    pass


class ScenarioKind(Enum):
    PERIODIC_TOUCHING_BUMP = "periodic_touching_bump"
    LOCALIZED_BUMP = "localized_bump_on_constant"
    PLANE_GRAPH = "plane_graph"
    CONSTANT = "constant"


def _cos4_dip(x: np.ndarray, width: float) -> np.ndarray:
    inside = np.abs(x) < width
    return np.where(inside, np.cos(np.pi * x / (2.0 * width)) ** 4, 0.0)


def periodic_touching_bump(epsilon: float, nu: float, n: int,
                           plane_kind: PlaneKind = PlaneKind.HALF) -> InterfaceProfile:
    """ψ(x) = ε(1 − cos(2πx/ν))/2；x = 0 是网格点且 ψ(0) = 0 精确成立"""
    if not epsilon > 0:
        raise ScenarioError(f"epsilon must be positive, got {epsilon!r}")
    slope = epsilon * math.pi / nu
    if slope > HALF_PLANE_SLOPE_BOUND + _SLOPE_EPS:
        raise ScenarioError(
            f"max slope επ/ν = {slope:.6g} exceeds the 3/10 bound (need ε ≤ 3ν/(10π) = {3 * nu / (10 * math.pi):.6g})")
    domain = DomainSpec.periodic(nu, plane_kind)
    x = grid_points(domain, n)
    return InterfaceProfile(domain, epsilon * (1.0 - np.cos(2.0 * np.pi * x / nu)) / 2.0)


def localized_bump_on_constant(psi_inf: float, epsilon: float, width: float,
                               half_width: float, n: int) -> InterfaceProfile:
    """ψ(x) = ψ∞ − ε·cos⁴(πx/(2w))（|x| < w），ε = ψ∞ 时在 x = 0 处触底"""
    if not psi_inf > 0:
        raise ScenarioError(f"far-field value ψ∞ must be positive, got {psi_inf!r}")
    if not 0 < epsilon <= psi_inf:
        raise ScenarioError(f"need 0 < ε ≤ ψ∞, got ε={epsilon!r}, ψ∞={psi_inf!r}")
    if not 0 < width <= half_width / 2.0:
        raise ScenarioError(f"bump half-width {width!r} must lie in (0, X/2] with X={half_width!r}")
    slope = _COS4_SLOPE * epsilon / width
    if slope > HALF_PLANE_SLOPE_BOUND + _SLOPE_EPS:
        raise ScenarioError(
            f"max slope 3√3πε/(8w) = {slope:.6g} exceeds the 3/10 bound; support too narrow for this amplitude")
    domain = DomainSpec.asymptotic(psi_inf, half_width, PlaneKind.HALF)
    x = grid_points(domain, n)
    samples = psi_inf - epsilon * _cos4_dip(x, width)
    if epsilon == psi_inf:
        samples[n // 2] = 0.0
    profile = InterfaceProfile(domain, np.maximum(samples, 0.0))
    profile.check_far_field()
    return profile


def _warn_plane_slope(slope: float) -> None:
    if slope > PLANE_SLOPE_BOUND:
        message = f"plane graph max slope {slope:.4g} > 1: slope maximum principle not guaranteed"
        logger.warning(f"全平面初值斜率超过 1: slope={slope:.4g}")
        warnings.warn(message, SlopeWarning, stacklevel=3)


def plane_graph(kind: str, amplitude: float, n: int, nu: Optional[float] = None,
                half_width: Optional[float] = None, psi_inf: float = 0.0,
                width: Optional[float] = None) -> InterfaceProfile:
    """全平面初值：sine（周期）A·sin(2πx/ν)，或 bump（渐近）ψ∞ + A·cos⁴(πx/(2w))"""
    if kind == "sine":
        if nu is None:
            raise ScenarioError("sine plane graph needs the period nu")
        domain = DomainSpec.periodic(nu, PlaneKind.WHOLE)
        x = grid_points(domain, n)
        _warn_plane_slope(2.0 * math.pi * abs(amplitude) / nu)
        return InterfaceProfile(domain, amplitude * np.sin(2.0 * np.pi * x / nu))
    if kind == "bump":
        if half_width is None:
            raise ScenarioError("bump plane graph needs the half-width X")
        w = width if width is not None else half_width / 2.0
        if not 0 < w <= half_width / 2.0:
            raise ScenarioError(f"bump half-width {w!r} must lie in (0, X/2]")
        domain = DomainSpec.asymptotic(psi_inf, half_width, PlaneKind.WHOLE)
        x = grid_points(domain, n)
        _warn_plane_slope(_COS4_SLOPE * abs(amplitude) / w)
        profile = InterfaceProfile(domain, psi_inf + amplitude * _cos4_dip(x, w))
        profile.check_far_field()
        return profile
    raise ScenarioError(f"unknown plane graph kind {kind!r} (expected 'sine' or 'bump')")


def constant_profile(value: float, n: int, nu: Optional[float] = None,
                     half_width: Optional[float] = None,
                     plane_kind: PlaneKind = PlaneKind.HALF) -> InterfaceProfile:
    if nu is not None:
        domain = DomainSpec.periodic(nu, plane_kind)
    elif half_width is not None:
        domain = DomainSpec.asymptotic(value, half_width, plane_kind)
    else:
        raise ScenarioError("constant scenario needs either nu or half_width")
    return InterfaceProfile(domain, np.full(n, float(value)))


# ---------------------------------------------------------------------------
# 配置段
# ---------------------------------------------------------------------------

_FLOAT_KEYS = ("epsilon", "nu", "psi_inf", "width", "half_width", "amplitude", "value", "slope_target")
_STR_KEYS = ("kind", "graph", "plane")
SCENARIO_KEYS = frozenset(_FLOAT_KEYS + _STR_KEYS)


@dataclass
class ScenarioSpec:
    """初值模板描述，对应配置文件 [scenario] 段"""
    kind: ScenarioKind
    epsilon: Optional[float] = None
    nu: Optional[float] = None
    psi_inf: Optional[float] = None
    width: Optional[float] = None
    half_width: Optional[float] = None
    graph: str = "sine"
    plane: str = "half"
    value: float = 0.0
    slope_target: Optional[float] = None

    @classmethod
    def from_config(cls, section: Dict[str, Any], violations: List[str]) -> Optional["ScenarioSpec"]:
        """从 [scenario] 段创建；类型错误追加到 violations"""
        kind_raw = section.get('kind')
        if kind_raw is None:
            violations.append("[scenario] missing required key 'kind'")
            return None
        try:
            kind = ScenarioKind(str(kind_raw).strip())
        except ValueError:
            violations.append(
                f"[scenario] unknown kind {kind_raw!r} (expected one of {[k.value for k in ScenarioKind]})")
            return None
        values: Dict[str, Any] = {}
        for key in _FLOAT_KEYS:
            if key in section and str(section[key]).strip() != "":
                try:
                    values[key] = float(section[key])
                except ValueError:
                    violations.append(f"[scenario] {key} must be a number, got {section[key]!r}")
        for key in ("graph", "plane"):
            if key in section:
                values[key] = str(section[key]).strip().lower()
        spec = cls(kind=kind, **values)
        spec._derive_amplitude()
        return spec

    def _derive_amplitude(self) -> None:
        """给定 slope_target 而未给振幅时，按模板的解析斜率反推"""
        if self.slope_target is None:
            return
        s = self.slope_target
        if self.kind is ScenarioKind.PERIODIC_TOUCHING_BUMP and self.epsilon is None and self.nu:
            self.epsilon = s * self.nu / math.pi
        elif self.kind is ScenarioKind.LOCALIZED_BUMP and self.epsilon is None and self.width:
            self.epsilon = s * self.width / _COS4_SLOPE
            if self.psi_inf is None:
                self.psi_inf = self.epsilon
        elif self.kind is ScenarioKind.PLANE_GRAPH and self.epsilon is None:
            if self.graph == "sine" and self.nu:
                self.epsilon = s * self.nu / (2.0 * math.pi)
            elif self.graph == "bump" and self.half_width:
                self.epsilon = s * (self.width or self.half_width / 2.0) / _COS4_SLOPE

    @property
    def plane_kind(self) -> PlaneKind:
        if self.kind in (ScenarioKind.PERIODIC_TOUCHING_BUMP, ScenarioKind.LOCALIZED_BUMP):
            return PlaneKind.HALF
        if self.kind is ScenarioKind.PLANE_GRAPH:
            return PlaneKind.WHOLE
        return PlaneKind.WHOLE if self.plane == "whole" else PlaneKind.HALF

    def validate(self) -> List[str]:
        """返回全部违规项（不抛异常）"""
        out: List[str] = []

        def need(*keys: str) -> bool:
            missing = [k for k in keys if getattr(self, k) is None]
            for k in missing:
                out.append(f"[scenario] {self.kind.value} requires '{k}'")
            return not missing

        if self.kind is ScenarioKind.PERIODIC_TOUCHING_BUMP:
            if need("epsilon", "nu"):
                if self.nu <= 0:
                    out.append("[scenario] nu must be positive")
                elif self.epsilon <= 0:
                    out.append("[scenario] epsilon must be positive")
                elif analytic_max_slope(self) > HALF_PLANE_SLOPE_BOUND + _SLOPE_EPS:
                    out.append(
                        f"[scenario] max slope επ/ν = {analytic_max_slope(self):.6g} violates the 3/10 rule "
                        f"(ε ≤ 3ν/(10π) = {3 * self.nu / (10 * math.pi):.6g})")
        elif self.kind is ScenarioKind.LOCALIZED_BUMP:
            if need("epsilon", "psi_inf", "width", "half_width"):
                if self.psi_inf <= 0:
                    out.append("[scenario] psi_inf must be positive")
                if not 0 < self.epsilon <= self.psi_inf:
                    out.append("[scenario] need 0 < epsilon ≤ psi_inf")
                if not 0 < self.width <= self.half_width / 2.0:
                    out.append("[scenario] width must lie in (0, half_width/2]")
                elif analytic_max_slope(self) > HALF_PLANE_SLOPE_BOUND + _SLOPE_EPS:
                    out.append(
                        f"[scenario] max slope 3√3πε/(8w) = {analytic_max_slope(self):.6g} violates the 3/10 rule")
        elif self.kind is ScenarioKind.PLANE_GRAPH:
            if self.graph not in ("sine", "bump"):
                out.append(f"[scenario] graph must be 'sine' or 'bump', got {self.graph!r}")
            elif self.graph == "sine":
                need("epsilon", "nu")
            else:
                need("epsilon", "half_width")
        else:
            if self.plane not in ("half", "whole"):
                out.append(f"[scenario] plane must be 'half' or 'whole', got {self.plane!r}")
            if self.nu is None and self.half_width is None:
                out.append("[scenario] constant requires 'nu' or 'half_width'")
            if self.plane == "half" and self.value < 0:
                out.append("[scenario] half-plane constant must be ≥ 0")
        return out

    def domain(self) -> DomainSpec:
        if self.kind is ScenarioKind.PERIODIC_TOUCHING_BUMP:
            return DomainSpec.periodic(self.nu, PlaneKind.HALF)
        if self.kind is ScenarioKind.LOCALIZED_BUMP:
            return DomainSpec.asymptotic(self.psi_inf, self.half_width, PlaneKind.HALF)
        if self.kind is ScenarioKind.PLANE_GRAPH:
            if self.graph == "sine":
                return DomainSpec.periodic(self.nu, PlaneKind.WHOLE)
            return DomainSpec.asymptotic(self.psi_inf or 0.0, self.half_width, PlaneKind.WHOLE)
        if self.nu is not None:
            return DomainSpec.periodic(self.nu, self.plane_kind)
        return DomainSpec.asymptotic(self.value, self.half_width, self.plane_kind)


def analytic_max_slope(spec: ScenarioSpec) -> float:
    """模板的精确最大斜率"""
    if spec.kind is ScenarioKind.PERIODIC_TOUCHING_BUMP:
        return spec.epsilon * math.pi / spec.nu
    if spec.kind is ScenarioKind.LOCALIZED_BUMP:
        return _COS4_SLOPE * spec.epsilon / spec.width
    if spec.kind is ScenarioKind.PLANE_GRAPH:
        if spec.graph == "sine":
            return 2.0 * math.pi * abs(spec.epsilon) / spec.nu
        return _COS4_SLOPE * abs(spec.epsilon) / (spec.width or spec.half_width / 2.0)
    return 0.0


def build_profile(spec: ScenarioSpec, n: int) -> InterfaceProfile:
    """按 kind 分派到具体模板"""
    if spec.kind is ScenarioKind.PERIODIC_TOUCHING_BUMP:
        return periodic_touching_bump(spec.epsilon, spec.nu, n)
    if spec.kind is ScenarioKind.LOCALIZED_BUMP:
        return localized_bump_on_constant(spec.psi_inf, spec.epsilon, spec.width, spec.half_width, n)
    if spec.kind is ScenarioKind.PLANE_GRAPH:
        return plane_graph(spec.graph, spec.epsilon, n, nu=spec.nu, half_width=spec.half_width,
                           psi_inf=spec.psi_inf or 0.0, width=spec.width)
    return constant_profile(spec.value, n, nu=spec.nu, half_width=spec.half_width,
                            plane_kind=spec.plane_kind)


__all__ = [
    "HALF_PLANE_SLOPE_BOUND",
    "PLANE_SLOPE_BOUND",
    "SlopeWarning",
    "ScenarioKind",
    "ScenarioSpec",
    "SCENARIO_KEYS",
    "periodic_touching_bump",
    "localized_bump_on_constant",
    "plane_graph",
    "constant_profile",
    "analytic_max_slope",
    "build_profile",
]
