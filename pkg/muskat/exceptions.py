"""Muskat 求解器异常定义"""

from typing import Any, List, Optional


class MuskatError(Exception):
    """求解器基础异常"""
    pass


class NonFiniteInputError(MuskatError, ValueError):
    """核函数收到 NaN/Inf 输入"""
    pass


class KernelPoleError(MuskatError, ZeroDivisionError):
    """核函数在极点处求值"""
    def __init__(self, kernel: str, detail: str = ""):
        self.kernel = kernel
        super().__init__(f"[{kernel}] pole input {detail}".rstrip())


class ProfileError(MuskatError, ValueError):
    """界面采样不满足不变量（负高度、非有限值、网格过小等）"""
    pass


class DomainMismatchError(MuskatError, ValueError):
    """操作与区域类型不匹配（例如在全平面上求 λ 耗散）"""
    pass


class ScenarioError(MuskatError, ValueError):
    """初值模板参数非法"""
    pass


class ConfigError(MuskatError, ValueError):
    """配置错误，一次性携带全部违规项"""
    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NonFiniteRhsError(MuskatError, FloatingPointError):
    """右端项出现 NaN/Inf，携带首个出错的网格下标"""
    def __init__(self, index: int, t: Optional[float] = None):
        self.index = index
        self.t = t
        where = f"grid index {index}" if t is None else f"grid index {index}, t={t!r}"
        super().__init__(f"non-finite right-hand side at {where}")


class BlowupSuspected(MuskatError):
    """步长降到 dt_min 仍无法接受，疑似奇性；携带最后一个被接受的状态"""
    def __init__(self, state: Any, dt_tried: float):
        self.state = state
        self.dt_tried = dt_tried
        super().__init__(f"BlowupSuspected at t={state.t!r} (dt={dt_tried:.3e})")


class VariationalError(MuskatError):
    """变分验证失败（根数量不符、所有起点都未收敛等），携带日志"""
    def __init__(self, message: str, log: Optional[List[Any]] = None):
        self.log = list(log or [])
        super().__init__(message)


class DiagnosticsFormatError(MuskatError, ValueError):
    """诊断 CSV 格式错误，携带文件行号（从 1 开始，含表头）"""
    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class OutputError(MuskatError, OSError):
    """输出目录不可写或写出失败"""
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
