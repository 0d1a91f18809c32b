"""
基础设施层
线程池与运行监控；运行产物存储在 run_store 中按需导入
"""

from .monitoring import InMemoryRunMonitor, RunInfo, RunMonitorProtocol, RunStatus
from .parallel import BoundedExecutor, ordered_row_map, ordered_sum

__all__ = [
    'BoundedExecutor',
    'ordered_row_map',
    'ordered_sum',
    'RunMonitorProtocol',
    'InMemoryRunMonitor',
    'RunInfo',
    'RunStatus',
]
