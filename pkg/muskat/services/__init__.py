"""
服务层模块
模拟、验证与诊断三条入口的编排逻辑
"""

from .simulation_service import SimulationService, SimulationServiceInterface, SimulationOutcome
from .verification_service import VerificationService, VerificationServiceInterface
from .diagnose_service import DiagnoseService, DiagnoseServiceInterface, DiagnoseOutcome

__all__ = [
    'SimulationService',
    'SimulationServiceInterface',
    'SimulationOutcome',
    'VerificationService',
    'VerificationServiceInterface',
    'DiagnoseService',
    'DiagnoseServiceInterface',
    'DiagnoseOutcome',
]
