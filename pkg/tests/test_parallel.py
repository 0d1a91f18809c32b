import threading

import numpy as np
import pytest

from muskat.infrastructure.parallel import (ROW_CHUNK, BoundedExecutor, ordered_row_map,
                                            ordered_sum, row_chunks)


def test_row_chunks_cover_rows_in_order():
    chunks = row_chunks(150)
    assert [(c.start, c.stop) for c in chunks] == [(0, 64), (64, 128), (128, 150)]
    assert ROW_CHUNK == 64


def test_executor_rejects_zero_workers():
    with pytest.raises(ValueError):
        BoundedExecutor(max_workers=0)


def test_map_ordered_keeps_submission_order():
    with BoundedExecutor(max_workers=4, queue_capacity=2) as pool:
        assert pool.map_ordered(lambda k: k * k, range(20)) == [k * k for k in range(20)]


def test_executor_uses_worker_threads():
    names = set()
    with BoundedExecutor(max_workers=2) as pool:
        pool.map_ordered(lambda _: names.add(threading.current_thread().name), range(8))
    assert all(name.startswith("muskat-worker") for name in names)


def test_ordered_row_map_matches_serial():
    values = np.random.default_rng(0).normal(size=(300, 5))

    def fn(rows):
        return values[rows].sum(axis=1)

    serial = ordered_row_map(fn, 300)
    with BoundedExecutor(max_workers=3) as pool:
        threaded = ordered_row_map(fn, 300, pool)
    assert np.array_equal(serial, threaded)


def test_ordered_sum_is_bitwise_reproducible():
    values = np.random.default_rng(1).normal(size=1000) * 1e8

    def fn(rows):
        return values[rows]

    with BoundedExecutor(max_workers=2) as two, BoundedExecutor(max_workers=5) as five:
        assert ordered_sum(fn, 1000, two) == ordered_sum(fn, 1000, five) == ordered_sum(fn, 1000)
