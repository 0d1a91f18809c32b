"""
并行执行基础设施
有界线程池 + 固定分块的有序行映射，结果与线程数无关
"""

import concurrent.futures
import logging
import threading
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")

# 分块大小固定，与 worker 数无关：每块内的 numpy 归约完全相同，逐位可复现
ROW_CHUNK = 64


class BoundedExecutor:
    def __init__(self, max_workers: int = 4, queue_capacity: int = 64):
        if max_workers < 1:
            raise ValueError(f"max_workers must be ≥ 1, got {max_workers}")
        self.max_workers = max_workers
        self._executor = concurrent.futures.ThreadPoolExecutor(
            max_workers=max_workers, thread_name_prefix="muskat-worker")
        self._sema = threading.BoundedSemaphore(value=queue_capacity)

    def submit(self, fn: Callable, *args, **kwargs):
        self._sema.acquire()
        def _run():
            try:
                return fn(*args, **kwargs)
            finally:
                self._sema.release()
        return self._executor.submit(_run)

    def map_ordered(self, fn: Callable[..., T], items: Iterable) -> List[T]:
        """按提交顺序收集结果"""
        futures = [self.submit(fn, item) for item in items]
        return [f.result() for f in futures]

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)

    def __enter__(self) -> "BoundedExecutor":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def row_chunks(n_rows: int, chunk: int = ROW_CHUNK) -> List[slice]:
    return [slice(start, min(start + chunk, n_rows)) for start in range(0, n_rows, chunk)]


def ordered_row_map(fn: Callable[[slice], np.ndarray], n_rows: int,
                    executor: Optional[BoundedExecutor] = None) -> np.ndarray:
    """对固定行块并行求值后按原顺序拼接

    fn(rows) 返回该块每行的结果（形状 (len(rows), ...)）。
    executor 为 None 或单线程时在当前线程顺序执行。
    """
    chunks = row_chunks(n_rows)
    if executor is None or executor.max_workers == 1 or len(chunks) == 1:
        parts = [fn(rows) for rows in chunks]
    else:
        parts = executor.map_ordered(fn, chunks)
    return np.concatenate(parts, axis=0)


def ordered_sum(fn: Callable[[slice], np.ndarray], n_rows: int,
                executor: Optional[BoundedExecutor] = None) -> float:
    """分块求值后按行下标从左到右顺序累加"""
    per_row = ordered_row_map(fn, n_rows, executor)
    total = 0.0
    for value in per_row.tolist():
        total += value
    return total


__all__ = [
    "ROW_CHUNK",
    "BoundedExecutor",
    "row_chunks",
    "ordered_row_map",
    "ordered_sum",
]
