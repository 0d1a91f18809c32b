import textwrap

import numpy as np
import pytest

from muskat.cli import parse_config
from muskat.config.settings import StepControl
from muskat.evolution import (TERMINATION_COMPLETED, ContourRhs, SimState, rhs_halfplane,
                              rhs_plane, rhs_split_form, run, step, step_error_estimate)
from muskat.exceptions import BlowupSuspected, DomainMismatchError, NonFiniteRhsError, ProfileError
from muskat.infrastructure.monitoring import InMemoryRunMonitor
from muskat.interface import DomainSpec, PlaneKind
from muskat.scenarios import constant_profile, periodic_touching_bump

from conftest import EPS_TOUCHING, periodic_profile


@pytest.mark.parametrize("c", [0.0, 0.1, 1.0])
def test_constant_is_steady_on_half_plane(c):
    p = constant_profile(c, 256, nu=1.0)
    assert np.max(np.abs(rhs_halfplane(p))) <= 1e-8


def test_constant_is_steady_on_asymptotic_half_plane():
    p = constant_profile(0.4, 64, half_width=4.0)
    assert np.max(np.abs(rhs_halfplane(p))) <= 1e-8


def test_constant_is_steady_on_plane():
    p = constant_profile(-0.3, 64, nu=1.0, plane_kind=PlaneKind.WHOLE)
    assert np.max(np.abs(rhs_plane(p))) <= 1e-8


def test_rhs_domain_mismatch(plane_wave, lifted_wave):
    with pytest.raises(DomainMismatchError):
        rhs_halfplane(plane_wave)
    with pytest.raises(DomainMismatchError):
        rhs_plane(lifted_wave)


def test_difference_form_matches_split_form_on_half_plane():
    p = periodic_profile(lambda x: 1.0 + 0.1 * np.sin(2 * np.pi * x), n=128)
    assert np.allclose(rhs_halfplane(p), rhs_split_form(p), atol=1e-6)


def test_difference_form_matches_split_form_on_plane():
    p = periodic_profile(lambda x: 0.05 * np.sin(2 * np.pi * x), n=128, plane=PlaneKind.WHOLE)
    assert np.allclose(rhs_plane(p), rhs_split_form(p), atol=1e-6)


def test_split_form_needs_positive_half_plane_data(touching_bump):
    with pytest.raises(ProfileError):
        rhs_split_form(touching_bump)


def test_split_form_is_periodic_only():
    with pytest.raises(DomainMismatchError):
        rhs_split_form(constant_profile(1.0, 32, half_width=2.0))


def test_plane_rhs_is_odd_under_reflection(plane_wave):
    flipped = plane_wave.with_samples(-plane_wave.samples)
    assert np.allclose(rhs_plane(flipped), -rhs_plane(plane_wave), atol=1e-12)


def _reflect(samples):
    # g_i = f_{−i mod N}，即 g(x) = f(−x)
    return np.roll(samples[::-1], 1)


@pytest.mark.parametrize("k", [1, 5, 37])
def test_half_plane_rhs_is_translation_equivariant(touching_bump, k):
    rolled = touching_bump.with_samples(np.roll(touching_bump.samples, k))
    assert np.allclose(rhs_halfplane(rolled), np.roll(rhs_halfplane(touching_bump), k), atol=1e-10)


def test_plane_rhs_is_translation_equivariant(plane_wave):
    rolled = plane_wave.with_samples(np.roll(plane_wave.samples, 11))
    assert np.allclose(rhs_plane(rolled), np.roll(rhs_plane(plane_wave), 11), atol=1e-10)


def test_plane_rhs_follows_reflection(plane_wave):
    mirrored = plane_wave.with_samples(_reflect(plane_wave.samples))
    assert np.allclose(rhs_plane(mirrored), _reflect(rhs_plane(plane_wave)), atol=1e-10)


def test_half_plane_rhs_follows_reflection():
    p = periodic_profile(lambda x: 1.0 + 0.1 * np.sin(2 * np.pi * x) + 0.03 * np.cos(4 * np.pi * x))
    mirrored = p.with_samples(_reflect(p.samples))
    assert np.allclose(rhs_halfplane(mirrored), _reflect(rhs_halfplane(p)), atol=1e-10)


def test_plane_rhs_ignores_vertical_shift(plane_wave):
    lifted = plane_wave.with_samples(plane_wave.samples + 0.3)
    assert np.allclose(rhs_plane(lifted), rhs_plane(plane_wave), atol=1e-10)


def test_half_plane_rhs_feels_vertical_shift():
    p = periodic_profile(lambda x: 0.2 + 0.05 * np.sin(2 * np.pi * x))
    lifted = p.with_samples(p.samples + 0.3)
    # 底部反射项依赖 f(x) + f(y)
    assert np.max(np.abs(rhs_halfplane(lifted) - rhs_halfplane(p))) > 1e-4


@pytest.mark.parametrize("plane", [PlaneKind.HALF, PlaneKind.WHOLE])
def test_rhs_converges_under_grid_doubling(plane):
    fn = lambda x: 1.0 + 0.1 * np.sin(2 * np.pi * x) + 0.03 * np.cos(4 * np.pi * x)
    evaluate = rhs_halfplane if plane is PlaneKind.HALF else rhs_plane
    coarse = evaluate(periodic_profile(fn, n=64, plane=plane))
    fine = evaluate(periodic_profile(fn, n=128, plane=plane))
    assert np.max(np.abs(fine[::2] - coarse)) <= 1e-6


def test_touching_bump_rhs_converges_away_from_floor():
    coarse = periodic_touching_bump(EPS_TOUCHING, 1.0, 256)
    fine = periodic_touching_bump(EPS_TOUCHING, 1.0, 512)
    diff = np.abs(rhs_halfplane(fine)[::2] - rhs_halfplane(coarse))
    # 贴底点附近走 f_xx 的 Taylor 分支，只比较 f ≥ 8·dx 的格点
    resolved = coarse.samples >= 8.0 * coarse.dx
    assert resolved.sum() > 128
    assert np.max(diff[resolved]) <= 1e-5


def test_plane_rhs_flattens_a_sine():
    p = periodic_profile(lambda x: 0.05 * np.sin(2 * np.pi * x), n=64, plane=PlaneKind.WHOLE)
    rhs = rhs_plane(p)
    # 峰值处向下，谷值处向上
    assert rhs[16] < 0.0 < rhs[48]


def test_nonfinite_samples_raise_with_index():
    rhs = ContourRhs(DomainSpec.periodic(1.0, PlaneKind.WHOLE), 16)
    samples = np.zeros(16)
    samples[5] = np.inf
    with pytest.raises(NonFiniteRhsError):
        rhs(samples)


def test_rhs_rejects_wrong_size():
    rhs = ContourRhs(DomainSpec.periodic(1.0), 16)
    with pytest.raises(ProfileError):
        rhs(np.ones(8))


def test_floor_nodes_are_counted(touching_bump):
    rhs = ContourRhs.for_profile(touching_bump)
    rhs(touching_bump.samples)
    assert rhs.floor_nodes_max >= 1
    assert rhs.evaluations == 1


def test_step_error_estimate_is_fifth_order():
    p = periodic_profile(lambda x: 1.0 + 0.05 * np.sin(2 * np.pi * x), n=32)
    rhs = ContourRhs.for_profile(p)
    ratio = step_error_estimate(p, 0.01, rhs) / step_error_estimate(p, 0.005, rhs)
    assert ratio > 12.0


def test_step_lands_on_stop_time(lifted_wave):
    control = StepControl(dt_init=1e-2, dt_max=1e-2)
    monitor = InMemoryRunMonitor()
    state = step(SimState(t=0.0, profile=lifted_wave), control, monitor=monitor, t_stop=1e-3)
    assert state.t == 1e-3
    assert state.step_count == 1
    assert monitor.get_stats()["steps_accepted"] == 1


def test_step_respects_cfl_cap(lifted_wave):
    control = StepControl(dt_init=1e-2, dt_max=1e-2, cfl_cap=0.1)
    state = step(SimState(t=0.0, profile=lifted_wave), control)
    assert state.dt_last <= 0.1 * lifted_wave.dx + 1e-15


def test_step_below_dt_min_raises_blowup(lifted_wave):
    control = StepControl(rtol=1e-16, atol=1e-16, dt_init=5e-3, dt_min=2e-3, dt_max=5e-3)
    with pytest.raises(BlowupSuspected) as err:
        step(SimState(t=0.0, profile=lifted_wave), control)
    assert err.value.state.t == 0.0
    assert err.value.state.reject_count >= 1


def test_step_preserves_half_plane_sign(touching_bump):
    state = SimState(t=0.0, profile=touching_bump)
    control = StepControl()
    for _ in range(3):
        state = step(state, control)
    assert np.min(state.profile.samples) >= 0.0


RUN_CONFIG = textwrap.dedent("""\
    [scenario]
    kind = periodic_touching_bump
    epsilon = 0.06
    nu = 1.0

    [grid]
    n = 128

    [time]
    t_end = 0.01

    [diagnostics]
    record_every = 3

    [output]
    snapshot_times = 0.005
    """)


def test_run_constant_completes(constant_config_text):
    result = run(parse_config(constant_config_text, environ={}))
    assert result.termination == TERMINATION_COMPLETED
    assert result.records[0].t == 0.0
    assert result.records[-1].t == 0.05
    assert [t for t, _ in result.snapshots] == [0.0, 0.02, 0.05]
    assert all(r.l1_mass == pytest.approx(0.5, abs=1e-12) for r in result.records)


def test_run_records_and_stats():
    cfg = parse_config(RUN_CONFIG, environ={})
    monitor = InMemoryRunMonitor()
    result = run(cfg, monitor)
    assert result.termination == TERMINATION_COMPLETED
    assert result.final_state.t == 0.01
    assert 0.005 in [t for t, _ in result.snapshots]
    assert len(result.records) >= 2
    assert result.stats["steps_accepted"] == result.final_state.step_count
    assert result.stats["rhs_evaluations"] > 0
    assert monitor.get_stats()["termination"] == TERMINATION_COMPLETED
    times = [r.t for r in result.records]
    assert times == sorted(times)


def test_run_is_independent_of_worker_count():
    base = parse_config(RUN_CONFIG, environ={})
    threaded = parse_config(RUN_CONFIG + "\n[runtime]\nworkers = 3\n", environ={})
    one = run(base)
    many = run(threaded)
    assert [r.to_row() for r in one.records] == [r.to_row() for r in many.records]
    assert np.array_equal(one.final_state.profile.samples, many.final_state.profile.samples)
