"""共享测试夹具"""

import math
import textwrap

import numpy as np
import pytest

from muskat.interface import DomainSpec, InterfaceProfile, PlaneKind, grid_points
from muskat.scenarios import periodic_touching_bump

# 半平面斜率上界的 90%：ε = 0.9·3/(10π)
EPS_TOUCHING = 0.9 * 3.0 / (10.0 * math.pi)


def periodic_profile(fn, n=64, nu=1.0, plane=PlaneKind.HALF) -> InterfaceProfile:
    domain = DomainSpec.periodic(nu, plane)
    return InterfaceProfile(domain, fn(grid_points(domain, n)))


@pytest.fixture
def touching_bump() -> InterfaceProfile:
    return periodic_touching_bump(EPS_TOUCHING, 1.0, 64)


@pytest.fixture
def lifted_wave() -> InterfaceProfile:
    """远离底部的光滑周期半平面界面"""
    return periodic_profile(lambda x: 1.0 + 0.1 * np.sin(2.0 * np.pi * x), n=64)


@pytest.fixture
def plane_wave() -> InterfaceProfile:
    return periodic_profile(lambda x: 0.05 * np.sin(2.0 * np.pi * x) + 0.02 * np.cos(4.0 * np.pi * x),
                            n=64, plane=PlaneKind.WHOLE)


@pytest.fixture
def constant_config_text() -> str:
    return textwrap.dedent("""\
        [scenario]
        kind = constant
        value = 0.5
        nu = 1.0

        [grid]
        n = 32

        [time]
        t_end = 0.05
        dt_max = 0.01

        [diagnostics]
        record_every = 2

        [output]
        snapshot_times = 0.02, 0.05
        """)


@pytest.fixture
def write_config(tmp_path):
    def _write(text: str, name: str = "run.ini") -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write
