import math

import numpy as np
import pytest

from muskat.exceptions import ScenarioError
from muskat.interface import PlaneKind, max_slope, min_height
from muskat.scenarios import (ScenarioKind, ScenarioSpec, SlopeWarning, analytic_max_slope,
                              build_profile, constant_profile, localized_bump_on_constant,
                              periodic_touching_bump, plane_graph)

from conftest import EPS_TOUCHING


def test_touching_bump_touches_at_origin():
    p = periodic_touching_bump(EPS_TOUCHING, 1.0, 128)
    assert p.samples[0] == 0.0
    assert min_height(p) == 0.0
    assert max_slope(p) <= 0.3


def test_touching_bump_rejects_steep_amplitude():
    with pytest.raises(ScenarioError, match="3/10"):
        periodic_touching_bump(0.1, 1.0, 64)


def test_touching_bump_scales_with_period():
    p = periodic_touching_bump(2 * EPS_TOUCHING, 2.0, 64)
    assert max_slope(p) == pytest.approx(EPS_TOUCHING * math.pi, rel=1e-10)


def test_localized_bump_slope_and_support():
    p = localized_bump_on_constant(0.5, 0.5, 8.0, 16.0, 1024)
    assert min_height(p) == 0.0
    assert p.samples[0] == 0.5
    expected = 3 * math.sqrt(3) * math.pi * 0.5 / (8 * 8.0)
    assert max_slope(p) == pytest.approx(expected, rel=1e-3)


def test_localized_bump_rejects_narrow_support():
    with pytest.raises(ScenarioError):
        localized_bump_on_constant(1.0, 1.0, 1.0, 4.0, 64)


def test_plane_graph_warns_above_unit_slope():
    with pytest.warns(SlopeWarning):
        plane_graph("sine", 0.5, 32, nu=1.0)


def test_plane_graph_unknown_kind():
    with pytest.raises(ScenarioError):
        plane_graph("square", 0.1, 32, nu=1.0)


def test_constant_profile_needs_domain_hint():
    with pytest.raises(ScenarioError):
        constant_profile(1.0, 16)


def test_constant_profile_on_whole_plane():
    p = constant_profile(-0.2, 16, nu=1.0, plane_kind=PlaneKind.WHOLE)
    assert np.all(p.samples == -0.2)


def test_spec_derives_amplitude_from_slope_target():
    violations = []
    spec = ScenarioSpec.from_config({"kind": "periodic_touching_bump", "nu": "1.0",
                                     "slope_target": "0.27"}, violations)
    assert violations == []
    assert spec.epsilon == pytest.approx(0.27 / math.pi)
    assert analytic_max_slope(spec) == pytest.approx(0.27)


def test_spec_validation_lists_slope_rule():
    spec = ScenarioSpec(kind=ScenarioKind.PERIODIC_TOUCHING_BUMP, epsilon=0.2, nu=1.0)
    problems = spec.validate()
    assert len(problems) == 1
    assert "3/10" in problems[0]


def test_spec_reports_unknown_kind():
    violations = []
    assert ScenarioSpec.from_config({"kind": "vortex"}, violations) is None
    assert "unknown kind" in violations[0]


def test_build_profile_dispatch():
    spec = ScenarioSpec(kind=ScenarioKind.PLANE_GRAPH, epsilon=0.05, nu=1.0, graph="sine")
    p = build_profile(spec, 64)
    assert p.domain.plane_kind is PlaneKind.WHOLE
    assert max_slope(p) == pytest.approx(analytic_max_slope(spec), rel=1e-10)
