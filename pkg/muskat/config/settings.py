"""
配置管理
运行配置的数据类定义、严格解析（汇总全部违规项）与环境变量覆盖
"""

import configparser
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from dotenv import load_dotenv

from ..exceptions import ConfigError
from ..interface import DomainSpec
from ..scenarios import SCENARIO_KEYS, ScenarioSpec

logger = logging.getLogger(__name__)

ENV_PREFIX = "MUSKAT_"


def _take(section: Dict[str, Any], name: str, key: str, cast: Callable, default: Any,
          violations: List[str]) -> Any:
    raw = section.get(key)
    if raw is None or str(raw).strip() == "":
        return default
    try:
        return cast(str(raw).strip())
    except ValueError:
        violations.append(f"[{name}] {key} must be {cast.__name__}, got {raw!r}")
        return default


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.replace(";", ",").split(",") if item.strip())


_float_list.__name__ = "a comma-separated list of numbers"


@dataclass
class StepControl:
    """自适应时间步控制"""
    rtol: float = 1e-6
    atol: float = 1e-9
    dt_init: float = 1e-4
    dt_min: float = 1e-10
    dt_max: float = 1e-2
    cfl_cap: float = 0.25

    @classmethod
    def from_config(cls, section: Dict[str, Any], violations: List[str]) -> 'StepControl':
        """从 [time] 段创建步长控制"""
        return cls(
            rtol=_take(section, 'time', 'rtol', float, cls.rtol, violations),
            atol=_take(section, 'time', 'atol', float, cls.atol, violations),
            dt_init=_take(section, 'time', 'dt_init', float, cls.dt_init, violations),
            dt_min=_take(section, 'time', 'dt_min', float, cls.dt_min, violations),
            dt_max=_take(section, 'time', 'dt_max', float, cls.dt_max, violations),
            cfl_cap=_take(section, 'time', 'cfl_cap', float, cls.cfl_cap, violations),
        )

    def validate(self) -> List[str]:
        out = []
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            out.append(f"[time] need 0 < dt_min ≤ dt_init ≤ dt_max, got "
                       f"{self.dt_min!r}, {self.dt_init!r}, {self.dt_max!r}")
        if not (self.rtol > 0 and self.atol > 0):
            out.append("[time] rtol and atol must be positive")
        if not 0 < self.cfl_cap <= 1:
            out.append(f"[time] cfl_cap must lie in (0, 1], got {self.cfl_cap!r}")
        return out


@dataclass
class DiagnosticsSettings:
    """诊断输出节奏与检查容差"""
    record_every: int = 10
    gamma_prime: float = 0.5
    energy_slack: float = 0.1
    mass_tol: float = 1e-6
    slope_tol: float = 1e-6
    energy_tol: float = 1e-6

    @classmethod
    def from_config(cls, section: Dict[str, Any], violations: List[str]) -> 'DiagnosticsSettings':
        return cls(
            record_every=_take(section, 'diagnostics', 'record_every', int, cls.record_every, violations),
            gamma_prime=_take(section, 'diagnostics', 'gamma_prime', float, cls.gamma_prime, violations),
            energy_slack=_take(section, 'diagnostics', 'energy_slack', float, cls.energy_slack, violations),
            mass_tol=_take(section, 'diagnostics', 'mass_tol', float, cls.mass_tol, violations),
            slope_tol=_take(section, 'diagnostics', 'slope_tol', float, cls.slope_tol, violations),
            energy_tol=_take(section, 'diagnostics', 'energy_tol', float, cls.energy_tol, violations),
        )

    def validate(self) -> List[str]:
        out = []
        if self.record_every < 1:
            out.append("[diagnostics] record_every must be ≥ 1")
        if not 0 < self.gamma_prime <= 1:
            out.append(f"[diagnostics] gamma_prime must lie in (0, 1], got {self.gamma_prime!r}")
        if not 0 <= self.energy_slack < 1:
            out.append("[diagnostics] energy_slack must lie in [0, 1)")
        return out


@dataclass
class RuntimeSettings:
    """线程数、触底阈值与墙钟上限"""
    workers: int = 1
    h_floor_factor: float = 10.0
    wall_clock_limit: Optional[float] = None

    @classmethod
    def from_config(cls, section: Dict[str, Any], violations: List[str]) -> 'RuntimeSettings':
        return cls(
            workers=_take(section, 'runtime', 'workers', int, cls.workers, violations),
            h_floor_factor=_take(section, 'runtime', 'h_floor_factor', float, cls.h_floor_factor, violations),
            wall_clock_limit=_take(section, 'runtime', 'wall_clock_limit', float, None, violations),
        )

    def validate(self) -> List[str]:
        out = []
        if self.workers < 1:
            out.append("[runtime] workers must be ≥ 1")
        if self.h_floor_factor < 0:
            out.append("[runtime] h_floor_factor must be ≥ 0")
        if self.wall_clock_limit is not None and self.wall_clock_limit <= 0:
            out.append("[runtime] wall_clock_limit must be positive")
        return out


@dataclass
class SimConfig:
    """一次模拟的完整配置"""
    scenario: ScenarioSpec
    domain: DomainSpec
    n: int
    control: StepControl
    t_end: float
    diagnostics: DiagnosticsSettings = field(default_factory=DiagnosticsSettings)
    runtime: RuntimeSettings = field(default_factory=RuntimeSettings)
    output_dir: Optional[str] = None
    snapshot_times: Tuple[float, ...] = ()

    @property
    def record_every(self) -> int:
        return self.diagnostics.record_every

    @property
    def gamma_prime(self) -> float:
        return self.diagnostics.gamma_prime

    @classmethod
    def from_config(cls, config: Dict[str, Dict[str, Any]]) -> 'SimConfig':
        """从分段字典创建并校验；所有问题汇总成一个 ConfigError"""
        violations: List[str] = []
        if not config.get('scenario'):
            raise ConfigError(["missing scenario"])

        for name, section in config.items():
            allowed = KNOWN_KEYS.get(name)
            if allowed is None:
                violations.append(f"unknown section [{name}]")
                continue
            for key in section:
                if key not in allowed:
                    violations.append(f"[{name}] unknown key '{key}'")

        scenario = ScenarioSpec.from_config(config['scenario'], violations)
        grid = config.get('grid', {})
        time_cfg = config.get('time', {})
        output = config.get('output', {})

        n = _take(grid, 'grid', 'n', int, None, violations)
        if n is None and 'n' not in grid:
            violations.append("[grid] missing required key 'n'")
        t_end = _take(time_cfg, 'time', 't_end', float, None, violations)
        if t_end is None and 't_end' not in time_cfg:
            violations.append("[time] missing required key 't_end'")

        control = StepControl.from_config(time_cfg, violations)
        diagnostics = DiagnosticsSettings.from_config(config.get('diagnostics', {}), violations)
        runtime = RuntimeSettings.from_config(config.get('runtime', {}), violations)
        runtime.wall_clock_limit = _take(time_cfg, 'time', 'wall_clock_limit', float,
                                         runtime.wall_clock_limit, violations)
        snapshot_times = _take(output, 'output', 'snapshot_times', _float_list, (), violations)
        output_dir = output.get('dir') or None

        violations.extend(control.validate())
        violations.extend(diagnostics.validate())
        violations.extend(runtime.validate())
        if scenario is not None:
            violations.extend(scenario.validate())
        if n is not None:
            if n < 8:
                violations.append(f"[grid] n must be ≥ 8, got {n}")
            elif scenario is not None and not scenario.validate():
                periodic = scenario.domain().is_periodic
                if periodic and (n & (n - 1)) != 0:
                    violations.append(f"[grid] periodic runs need n a power of two, got {n}")
                if not periodic and n % 2 != 0:
                    violations.append(f"[grid] asymptotic runs need an even n, got {n}")
        if t_end is not None and t_end < 0:
            violations.append(f"[time] t_end must be ≥ 0, got {t_end!r}")
        for s in snapshot_times:
            if t_end is not None and not 0 <= s <= t_end:
                violations.append(f"[output] snapshot time {s!r} outside [0, t_end]")

        if violations:
            raise ConfigError(violations)

        return cls(
            scenario=scenario,
            domain=scenario.domain(),
            n=n,
            control=control,
            t_end=t_end,
            diagnostics=diagnostics,
            runtime=runtime,
            output_dir=output_dir,
            snapshot_times=tuple(sorted(set(snapshot_times))),
        )


VERIFY_SUITES = ("kernels", "variational", "all")
DEFAULT_VERIFY_A = (0.05, 0.1, 0.2, 0.3)
VERIFY_KEYS = frozenset({"suite", "a", "h_samples", "seed", "minimizer_m", "minimizer_tol", "workers"})


@dataclass
class VerifySettings:
    """verify 子命令的参数"""
    suite: str = "all"
    a_values: Tuple[float, ...] = DEFAULT_VERIFY_A
    h_samples: int = 10000
    seed: int = 0
    minimizer_m: int = 1000
    minimizer_tol: float = 5e-2
    workers: int = 1

    @classmethod
    def from_config(cls, section: Dict[str, Any], violations: List[str]) -> 'VerifySettings':
        return cls(
            suite=str(section.get('suite') or cls.suite).strip(),
            a_values=_take(section, 'verify', 'a', _float_list, cls.a_values, violations),
            h_samples=_take(section, 'verify', 'h_samples', int, cls.h_samples, violations),
            seed=_take(section, 'verify', 'seed', int, cls.seed, violations),
            minimizer_m=_take(section, 'verify', 'minimizer_m', int, cls.minimizer_m, violations),
            minimizer_tol=_take(section, 'verify', 'minimizer_tol', float, cls.minimizer_tol, violations),
            workers=_take(section, 'verify', 'workers', int, cls.workers, violations),
        )

    @property
    def runs_kernels(self) -> bool:
        return self.suite in ("kernels", "all")

    @property
    def runs_variational(self) -> bool:
        return self.suite in ("variational", "all")

    def validate(self) -> List[str]:
        out = []
        if self.suite not in VERIFY_SUITES:
            out.append(f"[verify] suite must be one of {'|'.join(VERIFY_SUITES)}, got {self.suite!r}")
            return out
        if not self.a_values:
            out.append("[verify] a list is empty")
        upper, label = (0.3, "(0, 3/10]") if self.runs_variational else (1.0, "(0, 1]")
        for a in self.a_values:
            if not 0.0 < a <= upper:
                out.append(f"[verify] a = {a!r} outside {label}")
        if self.h_samples < 2:
            out.append("[verify] h_samples must be ≥ 2")
        if self.minimizer_m < 10:
            out.append("[verify] minimizer_m must be ≥ 10")
        if self.minimizer_tol <= 0:
            out.append("[verify] minimizer_tol must be positive")
        if self.workers < 1:
            out.append("[verify] workers must be ≥ 1")
        return out

    @classmethod
    def parse(cls, section: Dict[str, Any]) -> 'VerifySettings':
        """创建并校验，违规项汇总成一个 ConfigError"""
        violations: List[str] = []
        unknown = [k for k in section if k not in VERIFY_KEYS]
        violations.extend(f"[verify] unknown key '{k}'" for k in unknown)
        settings = cls.from_config(section, violations)
        violations.extend(settings.validate())
        if violations:
            raise ConfigError(violations)
        return settings


KNOWN_KEYS: Dict[str, frozenset] = {
    'scenario': SCENARIO_KEYS,
    'grid': frozenset({'n'}),
    'time': frozenset({'t_end', 'rtol', 'atol', 'dt_init', 'dt_min', 'dt_max', 'cfl_cap',
                       'wall_clock_limit'}),
    'diagnostics': frozenset({'record_every', 'gamma_prime', 'energy_slack', 'mass_tol',
                              'slope_tol', 'energy_tol'}),
    'output': frozenset({'dir', 'snapshot_times'}),
    'runtime': frozenset({'workers', 'h_floor_factor', 'wall_clock_limit'}),
}


def parse_ini(text: str) -> Dict[str, Dict[str, str]]:
    """INI 文本 → 分段字典（键名小写）"""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError([f"malformed config: {e}"]) from e
    return {section: {k: v for k, v in parser.items(section)} for section in parser.sections()}


def env_override(d: Dict[str, Any], prefix: str = ENV_PREFIX,
                 environ: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """MUSKAT_<SECTION>_<KEY> 覆盖对应配置项（只覆盖已存在的段）"""
    env = os.environ if environ is None else environ
    for k, v in list(d.items()):
        key = (prefix + k).upper()
        if isinstance(v, dict):
            env_override(v, key + '_', env)
            # 段内未写出的已知键也允许由环境变量补上
            for known in KNOWN_KEYS.get(k, ()):
                env_val = env.get(f"{key}_{known}".upper())
                if env_val is not None and known not in v:
                    v[known] = env_val
        else:
            env_val = env.get(key)
            if env_val is not None:
                d[k] = env_val
    return d


def load_config_file(path: str, environ: Optional[Dict[str, str]] = None) -> Dict[str, Dict[str, str]]:
    """读取 INI 配置文件，加载 .env 后应用环境变量覆盖"""
    load_dotenv(override=False)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError([f"cannot read config {path!r}: {e}"]) from e
    cfg = parse_ini(text)
    env_override(cfg, environ=environ)
    logger.info(f"配置已加载: path={path}, sections={sorted(cfg)}")
    return cfg


__all__ = [
    "StepControl",
    "DiagnosticsSettings",
    "RuntimeSettings",
    "SimConfig",
    "VerifySettings",
    "VERIFY_SUITES",
    "DEFAULT_VERIFY_A",
    "KNOWN_KEYS",
    "parse_ini",
    "env_override",
    "load_config_file",
]
