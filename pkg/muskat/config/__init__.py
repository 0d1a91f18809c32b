"""
配置管理模块
提供配置类定义、校验和日志初始化
"""

from .settings import (
    DEFAULT_VERIFY_A,
    DiagnosticsSettings,
    RuntimeSettings,
    SimConfig,
    StepControl,
    VerifySettings,
    env_override,
    load_config_file,
    parse_ini,
)
from .logging_config import setup_logging, log_with_context

__all__ = [
    'DEFAULT_VERIFY_A',
    'DiagnosticsSettings',
    'RuntimeSettings',
    'SimConfig',
    'StepControl',
    'VerifySettings',
    'env_override',
    'load_config_file',
    'parse_ini',
    'setup_logging',
    'log_with_context',
]
