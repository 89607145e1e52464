import math

import numpy as np
import pytest

from charext.densities import DensitySpec, eval_density, normalize
from charext.grid import GridFunction, fft_grid_axes
from charext.perturbation import PerturbationParams, xi_base, xi_eval, xi_hat_base, xi_hat_two, xi_two
from charext.spectral import band_limit_check, forward_ft, parseval_ratio, poisson_check

import reference


def sampled(func, radius, count, dim=1):
    return GridFunction.sample(func, fft_grid_axes(radius, count, dim), periodic=True)


def test_forward_ft_total_mass():
    spec = normalize(DensitySpec.ball(2, 1, 1))
    g = sampled(lambda t: eval_density(spec, t), 4.0, 4096)
    assert forward_ft(g, [[0.0]])[0] == pytest.approx(1.0, abs=1e-6)
    F = forward_ft(g)
    mid = F.shape[0] // 2
    assert F.coords(0)[mid] == 0.0
    assert F.values[mid] == pytest.approx(1.0, abs=1e-6)


def test_fft_matches_direct_sum():
    g = sampled(lambda t: np.exp(-0.5 * np.sum(t * t, axis=-1)) * (1 + 0.3 * t[..., 0]), 8.0, 64, 2)
    F = forward_ft(g)
    pts = F.points().reshape(-1, 2)
    pick = np.random.default_rng(0).choice(pts.shape[0], 40, replace=False)
    direct = forward_ft(g, pts[pick])
    assert np.max(np.abs(direct - F.values.reshape(-1)[pick])) <= 1e-12


def test_forward_ft_linearity():
    rng = np.random.default_rng(3)
    axes = fft_grid_axes(5.0, 32, 2)
    g1 = GridFunction(axes, rng.normal(size=(32, 32)), True)
    g2 = GridFunction(axes, rng.normal(size=(32, 32)), True)
    lhs = forward_ft(g1.with_values(2.0 * g1.values - 0.5 * g2.values)).values
    rhs = 2.0 * forward_ft(g1).values - 0.5 * forward_ft(g2).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_even_real_transform_is_real_and_even():
    g = sampled(lambda t: np.exp(-t[..., 0] ** 2), 6.0, 256)
    F = forward_ft(g).values
    peak = np.max(np.abs(F))
    assert np.max(np.abs(F.imag)) <= 1e-12 * peak
    # index 0 is the unpaired -Nyquist bin
    assert np.max(np.abs(F[1:] - F[1:][::-1])) <= 1e-12 * peak


def test_beyond_nyquist_raises():
    g = sampled(lambda t: np.exp(-t[..., 0] ** 2), 6.0, 64)
    with pytest.raises(ValueError, match="Nyquist"):
        forward_ft(g, [[math.pi / g.spacing[0] * 1.01]])


def test_grid_transform_of_xi_matches_closed_form():
    p = PerturbationParams.for_sigma(1, 4.0, 1.0)
    R = 200 * math.pi / 4.0
    g = sampled(lambda t: xi_eval(t, p), R, 2 ** 16)
    # away from 0 and +-sigma the truncation leakage is small
    y = np.array([[1.0], [2.0], [2.7], [5.0], [9.0]])
    err = np.abs(forward_ft(g, y) - p.rho * (p.A ** 2 * xi_hat_base(y[:, 0], 4.0) - xi_hat_two(y[:, 0], 4.0)))
    assert np.max(err) <= 1e-4


@pytest.mark.parametrize("sigma, y, expected", [
    # oracle: Fourier-weighted adaptive quadrature (reference.even_ft_quad)
    (2.0, 0.5, 0.4809084106506241),
    (2.0, 1.3, 0.07939889193700239),
])
def test_xi_hat_base_against_quadrature(sigma, y, expected):
    assert xi_hat_base(y, sigma) == pytest.approx(expected, abs=1e-7)


@pytest.mark.parametrize("sigma, y, expected", [
    (2.0, 0.5, 0.47948716026890403),
    (2.0, 1.3, -0.6950975743097348),
])
def test_xi_hat_two_against_quadrature(sigma, y, expected):
    assert xi_hat_two(y, sigma) == pytest.approx(expected, abs=1e-7)


def test_band_limit_zero_function():
    g = GridFunction(fft_grid_axes(3.0, 16, 1), np.zeros(16), True)
    rep = band_limit_check(g, 1.0)
    assert rep.maxInside == 0 and rep.maxOutside == 0 and rep.relativeResidual == 0


def test_band_limit_gaussian_is_not_band_limited():
    g = sampled(lambda t: np.exp(-0.5 * t[..., 0] ** 2), 20.0, 1024)
    rep = band_limit_check(g, 1.0)
    assert rep.relativeResidual > 1e-3
    # the first frequency counted as outside lies one bin beyond sigma
    dy = 2 * math.pi / 40.0
    first = dy * (math.floor((1.0 + dy) / dy) + 1)
    assert rep.relativeResidual == pytest.approx(math.exp(-0.5 * first ** 2), rel=1e-6)


def test_band_limit_flags_poor_decay():
    g = sampled(lambda t: 1.0 / (1.0 + t[..., 0] ** 2), 10.0, 256)
    assert band_limit_check(g, 1.0).warning is not None


def test_parseval():
    g = sampled(lambda t: np.exp(-np.sum(t * t, axis=-1)), 6.0, 64, 2)
    assert parseval_ratio(g) == pytest.approx(1.0, abs=1e-12)


def test_poisson_xi_fixtures():
    s = 2.0
    r1 = poisson_check(lambda x: xi_base(x[:, 0], s), lambda y: xi_hat_base(y[:, 0], s),
                       [math.pi], [math.pi / 2], 50)
    assert r1.lhs == pytest.approx(2.0 / math.pi ** 2, rel=1e-14)
    assert r1.absError <= 1e-8
    r2 = poisson_check(lambda x: xi_two(x[:, 0], s), lambda y: xi_hat_two(y[:, 0], s),
                       [math.pi], [math.pi / 2], 50)
    assert r2.lhs == pytest.approx(0.5, rel=1e-14)
    assert r2.absError <= 1e-8


def test_poisson_gaussian_against_direct_summation():
    r = poisson_check(lambda x: np.exp(-0.5 * x[:, 0] ** 2),
                      lambda y: math.sqrt(2 * math.pi) * np.exp(-0.5 * y[:, 0] ** 2), [1.0], [0.0], 20)
    lhs, rhs = reference.theta_series(0.0, 1.0, 20)
    assert r.absError <= 1e-12
    assert r.lhs == pytest.approx(lhs, rel=1e-14)
    assert r.rhs.real == pytest.approx(rhs, rel=1e-14)


def test_poisson_two_dimensional_gaussian():
    nu = np.array([0.8, 1.3])
    x = np.array([0.2, -0.4])
    r = poisson_check(lambda t: np.exp(-0.5 * np.sum(t * t, axis=1)),
                      lambda y: 2 * math.pi * np.exp(-0.5 * np.sum(y * y, axis=1)), nu, x, 12)
    assert r.absError <= 1e-12


def test_poisson_errors():
    with pytest.raises(ValueError):
        poisson_check(lambda x: x[:, 0], lambda y: y[:, 0], [0.0], [0.0], 3)
    with pytest.raises(ValueError, match="non-finite"), np.errstate(divide="ignore"):
        poisson_check(lambda x: 1.0 / x[:, 0], lambda y: y[:, 0], [1.0], [0.0], 3)
