import math

import numpy as np
import pytest
from scipy.integrate import quad

from muskat.exceptions import KernelPoleError, NonFiniteInputError
from muskat.kernels import (G_minus, G_plus, SlopeParam, arctan_primitive, dB_G_plus, g_fun,
                            g_prime, h_kernel, h_r, integrand_pair, lambda_rate,
                            linear_primitive, linear_primitive_grad, log_kernel, log_kernel_tail,
                            periodized_kernel, periodized_poisson_kernel, tilde_lambda_rate)


A03 = SlopeParam(0.3)


def test_slope_param_precomputes_A():
    assert A03.A == pytest.approx(1.0 / 0.3 - 0.3, rel=1e-15)


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5, float("nan")])
def test_slope_param_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        SlopeParam(bad)


def test_h_vanishes_on_ray():
    rng = np.random.default_rng(7)
    for a in rng.uniform(0.01, 1.0, 50):
        p = SlopeParam(a)
        y = rng.uniform(0.5, 10.0, 20) * rng.choice([-1.0, 1.0], 20)
        assert np.max(np.abs(h_kernel(p, y, a * y))) <= 1e-12


def test_h_pole_raises():
    with pytest.raises(KernelPoleError):
        h_kernel(A03, 0.0, 0.0)


def test_h_rejects_nan():
    with pytest.raises(NonFiniteInputError):
        h_kernel(A03, float("nan"), 1.0)


def test_h_r_matches_g_over_y_cubed():
    y = np.array([-2.0, -0.7, 0.4, 3.0])
    r = np.array([0.3, 1.1, -0.2, 2.5])
    assert np.allclose(h_r(A03, y, r), g_fun(A03, r / y) / y ** 3, rtol=1e-12)


def test_g_at_zero_is_minus_A_exactly():
    assert g_fun(A03, 0.0) == -A03.A


def test_g_at_minus_a():
    assert g_fun(A03, -0.3) == pytest.approx(-0.361639, abs=1e-5)


def test_g_prime_matches_finite_difference():
    s = np.linspace(-8.0, 8.0, 161)
    step = 1e-6
    fd = (np.asarray(g_fun(A03, s + step)) - np.asarray(g_fun(A03, s - step))) / (2 * step)
    assert np.allclose(g_prime(A03, s), fd, atol=1e-7)


def test_integrand_pair_zero_at_origin():
    assert integrand_pair(0.0, 0.2, 0.1, 1.0, 0.5, -1) == 0.0


def test_integrand_pair_rejects_bad_sigma():
    with pytest.raises(ValueError):
        integrand_pair(0.1, 0.2, 0.1, 1.0, 0.5, 0)


def test_periodized_kernels_match_image_sums():
    n = np.arange(-100000, 100001, dtype=float)
    y, d = 0.31, 0.4
    den = (y + n) ** 2 + d * d
    assert periodized_kernel(y, d, 1.0) == pytest.approx(np.sum((y + n) / den), abs=1e-4)
    assert periodized_poisson_kernel(y, d, 1.0) == pytest.approx(np.sum(d / den), abs=1e-4)


@pytest.mark.parametrize("y, nu", [(0.0, 1.0), (1.0, 1.0), (-3.0, 1.0), (2.2, 1.1), (1.4, 0.7)])
def test_periodized_kernel_pole_raises(y, nu):
    with pytest.raises(KernelPoleError):
        periodized_kernel(y, 0.0, nu)
    with pytest.raises(KernelPoleError):
        periodized_poisson_kernel(y, 0.0, nu)


def test_periodized_kernel_is_periodic_in_offset():
    assert periodized_kernel(1.3, 0.2, 1.0) == pytest.approx(periodized_kernel(0.3, 0.2, 1.0), rel=1e-12)
    assert periodized_kernel(0.5, 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_periodized_poisson_kernel_large_height_saturates():
    assert periodized_poisson_kernel(0.2, 500.0, 1.0) == pytest.approx(math.pi)


def test_lambda_rates_vanish_on_equal_heights_and_are_ordered():
    assert lambda_rate(0.4, 0.4, 0.3) == 0.0
    rng = np.random.default_rng(3)
    a, b = rng.uniform(0, 2, 1000), rng.uniform(0, 2, 1000)
    c = rng.uniform(-3, 3, 1000)
    lam = np.asarray(lambda_rate(a, b, c))
    assert np.all(lam >= 0.0)
    assert np.all(np.asarray(tilde_lambda_rate(a, b, c)) >= lam - 1e-15)


def test_lambda_rate_handles_zero_denominator():
    assert lambda_rate(0.0, 0.0, 0.0) == 0.0


def test_linear_primitive_differentiates_to_h():
    step = 1e-6
    for B, c in [(1.0, 0.3), (1.5, -0.2), (0.7, 0.0)]:
        y = np.linspace(-5.0, 5.0, 41)
        fd = (np.asarray(linear_primitive(A03, B, c, y + step))
              - np.asarray(linear_primitive(A03, B, c, y - step))) / (2 * step)
        assert np.allclose(fd, h_kernel(A03, y, B + c * y), atol=1e-7)


def test_linear_primitive_reduces_to_G():
    y = np.linspace(-4.0, 4.0, 17)
    assert np.allclose(linear_primitive(A03, 1.3, 0.3, y), G_plus(A03, 1.3, y), rtol=1e-12)
    assert np.allclose(linear_primitive(A03, 1.3, -0.3, y), G_minus(A03, 1.3, y), rtol=1e-12)


def test_linear_primitive_vanishes_at_infinity():
    assert linear_primitive(A03, 1.0, 0.2, np.inf) == 0.0


def test_linear_primitive_grad_matches_finite_difference():
    step = 1e-7
    B, c, y = 1.2, -0.15, 2.5
    d_b, d_c = linear_primitive_grad(A03, B, c, y)
    fd_b = (linear_primitive(A03, B + step, c, y) - linear_primitive(A03, B - step, c, y)) / (2 * step)
    fd_c = (linear_primitive(A03, B, c + step, y) - linear_primitive(A03, B, c - step, y)) / (2 * step)
    assert d_b == pytest.approx(fd_b, abs=1e-7)
    assert d_c == pytest.approx(fd_c, abs=1e-7)


def test_dB_G_plus_matches_finite_difference():
    step = 1e-6
    y = np.linspace(0.5, 6.0, 12)
    fd = (np.asarray(G_plus(A03, 1.0 + step, y)) - np.asarray(G_plus(A03, 1.0 - step, y))) / (2 * step)
    assert np.allclose(dB_G_plus(A03, 1.0, y), fd, atol=1e-8)


def test_arctan_primitive_derivative():
    s = np.linspace(-3.0, 3.0, 13)
    step = 1e-6
    fd = (np.asarray(arctan_primitive(s + step)) - np.asarray(arctan_primitive(s - step))) / (2 * step)
    assert np.allclose(fd, np.arctan(s), atol=1e-8)


def test_log_kernel_pole_raises():
    with pytest.raises(KernelPoleError):
        log_kernel(0.0, 1.0)


@pytest.mark.parametrize("C,u0", [(0.2, 0.5), (1.0, 1.0), (2.5, 7.0)])
def test_log_kernel_tail_matches_quadrature(C, u0):
    value, _ = quad(lambda u: math.log1p((C / u) ** 2), u0, np.inf, epsabs=1e-13)
    assert log_kernel_tail(C, u0) == pytest.approx(value, abs=1e-9)
