import json
import math

import numpy as np
import pytest

from muskat.exceptions import ProfileError
from muskat.interface import (DomainSpec, InterfaceProfile, PlaneKind, derivative, from_snapshot,
                              grid_derivative, grid_points, holder_seminorm, holder_seminorm_fxx,
                              l1_mass, l2_energy, max_slope, min_height, sup_norm, to_snapshot)
from muskat.scenarios import periodic_touching_bump

from conftest import EPS_TOUCHING, periodic_profile


def test_grid_points_periodic_and_asymptotic():
    assert np.allclose(grid_points(DomainSpec.periodic(2.0), 8), np.arange(8) * 0.25)
    x = grid_points(DomainSpec.asymptotic(1.0, 4.0), 16)
    assert x[0] == -4.0
    assert x[8] == 0.0


def test_profile_rejects_negative_half_plane_sample():
    with pytest.raises(ProfileError, match="index 3"):
        InterfaceProfile(DomainSpec.periodic(1.0), np.array([1, 1, 1, -0.1, 1, 1, 1, 1.0]))


def test_profile_allows_negative_on_whole_plane():
    p = InterfaceProfile(DomainSpec.periodic(1.0, PlaneKind.WHOLE), -np.ones(8))
    assert min_height(p) == -1.0


@pytest.mark.parametrize("samples", [np.ones(12), np.array([1.0] * 7 + [np.nan])])
def test_profile_rejects_bad_periodic_samples(samples):
    with pytest.raises(ProfileError):
        InterfaceProfile(DomainSpec.periodic(1.0), samples)


def test_profile_rejects_odd_asymptotic_grid():
    with pytest.raises(ProfileError):
        InterfaceProfile(DomainSpec.asymptotic(1.0, 2.0), np.ones(9))


def test_domain_validation():
    with pytest.raises(ProfileError):
        DomainSpec.periodic(0.0)
    with pytest.raises(ProfileError):
        DomainSpec.asymptotic(-1.0, 2.0)


def test_profile_samples_are_read_only():
    p = periodic_profile(lambda x: 1.0 + 0 * x, n=8)
    with pytest.raises(ValueError):
        p.samples[0] = 2.0


def test_spectral_derivatives_of_sine():
    p = periodic_profile(lambda x: 1.0 + 0.1 * np.sin(2 * np.pi * x), n=32)
    x = p.x
    k = 2 * np.pi
    assert np.allclose(derivative(p, 1), 0.1 * k * np.cos(k * x), atol=1e-12)
    assert np.allclose(derivative(p, 2), -0.1 * k ** 2 * np.sin(k * x), atol=1e-10)
    assert np.allclose(derivative(p, 3), -0.1 * k ** 3 * np.cos(k * x), atol=1e-8)


def test_finite_difference_derivative_on_asymptotic_grid():
    domain = DomainSpec.asymptotic(0.0, 8.0, PlaneKind.WHOLE)
    x = grid_points(domain, 512)
    p = InterfaceProfile(domain, np.exp(-x * x))
    assert np.allclose(derivative(p, 1), -2 * x * np.exp(-x * x), atol=1e-5)
    assert np.allclose(derivative(p, 2), (4 * x * x - 2) * np.exp(-x * x), atol=1e-4)


def test_grid_derivative_needs_eight_points():
    with pytest.raises(ProfileError):
        grid_derivative(np.ones(4), DomainSpec.periodic(1.0), 1)


def test_grid_derivative_rejects_order():
    with pytest.raises(ValueError):
        grid_derivative(np.ones(16), DomainSpec.periodic(1.0), 4)


def test_norms_of_touching_bump(touching_bump):
    assert min_height(touching_bump) == 0.0
    assert l1_mass(touching_bump) == pytest.approx(EPS_TOUCHING / 2, rel=1e-12)
    assert l2_energy(touching_bump) == pytest.approx(3 * EPS_TOUCHING ** 2 / 8, rel=1e-12)
    assert max_slope(touching_bump) == pytest.approx(EPS_TOUCHING * math.pi, rel=1e-10)


def test_asymptotic_norms_measure_excess_over_far_field():
    domain = DomainSpec.asymptotic(2.0, 4.0)
    p = InterfaceProfile(domain, np.full(16, 2.0))
    assert l1_mass(p) == 0.0
    assert l2_energy(p) == 0.0


def test_holder_seminorm_of_linear_function():
    x = np.linspace(0.0, 1.0, 11)
    assert holder_seminorm(3.0 * x, 0.1, 1.0) == pytest.approx(3.0)
    assert holder_seminorm(np.zeros(11), 0.1, 0.5) == 0.0


def test_holder_seminorm_rejects_exponent():
    with pytest.raises(ValueError):
        holder_seminorm(np.ones(4), 0.1, 0.0)


def test_far_field_check():
    domain = DomainSpec.asymptotic(1.0, 4.0)
    samples = np.ones(32)
    samples[0] = 1.5
    with pytest.raises(ProfileError):
        InterfaceProfile(domain, samples).check_far_field()


def test_snapshot_round_trip_is_bit_identical(touching_bump):
    data = json.loads(json.dumps(to_snapshot(touching_bump, 0.125)))
    t, restored = from_snapshot(data)
    assert t == 0.125
    assert restored.domain == touching_bump.domain
    assert np.array_equal(restored.samples, touching_bump.samples)


def test_from_snapshot_rejects_size_mismatch(touching_bump):
    data = to_snapshot(touching_bump, 0.0)
    data["N"] = 32
    with pytest.raises(ProfileError):
        from_snapshot(data)


def test_from_snapshot_rejects_missing_field():
    with pytest.raises(ProfileError):
        from_snapshot({"t": 0.0})


def test_third_derivative_on_asymptotic_grid():
    domain = DomainSpec.asymptotic(0.0, 8.0, PlaneKind.WHOLE)
    x = grid_points(domain, 512)
    p = InterfaceProfile(domain, np.exp(-x * x))
    expected = (12 * x - 8 * x ** 3) * np.exp(-x * x)
    assert np.allclose(derivative(p, 3), expected, atol=1e-3)


def test_sup_norm():
    assert sup_norm(periodic_profile(lambda x: 0.4 + 0 * x, n=16)) == 0.4
    bump = periodic_touching_bump(EPS_TOUCHING, 1.0, 64)
    assert sup_norm(bump) == pytest.approx(EPS_TOUCHING, rel=1e-12)


@pytest.mark.parametrize("k", [1, 17, 40])
def test_mass_and_energy_are_translation_invariant(touching_bump, k):
    rolled = touching_bump.with_samples(np.roll(touching_bump.samples, k))
    assert l1_mass(rolled) == pytest.approx(l1_mass(touching_bump), rel=1e-13)
    assert l2_energy(rolled) == pytest.approx(l2_energy(touching_bump), rel=1e-13)


def test_holder_seminorm_fxx_of_cosine_bump():
    # ψ = ε(1 − cos 2πx)/2：sup|ψ_xxx| = 4επ³
    bump = periodic_touching_bump(EPS_TOUCHING, 1.0, 128)
    assert holder_seminorm_fxx(bump, 1.0) == pytest.approx(4 * EPS_TOUCHING * math.pi ** 3, rel=0.05)


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_holder_seminorm_fxx_is_linear_in_amplitude(touching_bump, c):
    scaled = touching_bump.with_samples(c * touching_bump.samples)
    for gamma in (0.5, 1.0):
        expected = c * holder_seminorm_fxx(touching_bump, gamma)
        assert holder_seminorm_fxx(scaled, gamma) == pytest.approx(expected, rel=1e-12)
