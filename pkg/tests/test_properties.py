import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from charext.densities import DensitySpec, LqBallSupport, char_fn, eval_density, normalize
from charext.grid import Axis, GridFunction
from charext.lattice import ball_certificate, verify_certificate
from charext.oracles import delta_n
from charext.perturbation import PerturbationParams, xi_base, xi_eval, xi_hat_base
from charext.spectral import poisson_check

SETTINGS = settings(max_examples=40, deadline=None)

q_values = st.sampled_from([2.0, 3.0, 4.0, math.inf])
finite = st.floats(-50, 50, allow_nan=False)


@st.composite
def ball_specs(draw):
    q = draw(q_values)
    delta = draw(st.floats(0.3, 2.0))
    n = draw(st.integers(1, 2))
    return normalize(DensitySpec.ball(q, delta, n))


@SETTINGS
@given(ball_specs(), st.integers(0, 2 ** 32 - 1))
def test_density_nonnegative(spec, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3, 3, size=(10_000, spec.dim))
    vals = eval_density(spec, pts)
    assert np.all(vals >= 0)
    outside = spec.support().distance(pts) > 0
    assert np.all(vals[outside] == 0)


@SETTINGS
@given(ball_specs(), st.lists(st.floats(-15, 15), min_size=2, max_size=2))
def test_characteristic_function_bound_and_symmetry(spec, x):
    x = np.array(x[: spec.dim])
    f = char_fn(spec, x)
    assert abs(f) <= 1.0 + 1e-8
    assert abs(char_fn(spec, -x) - np.conj(f)) <= 1e-13


@SETTINGS
@given(q_values, st.floats(0.3, 2.0), st.integers(1, 2), st.floats(0.05, 0.99))
def test_ball_recipe_inside_regime(q, delta, n, frac):
    root = 1.0 if math.isinf(q) else n ** (1.0 / q)
    sigma = frac * math.pi * root / delta
    cert = ball_certificate(q, delta, n, sigma)
    assert cert is not None and cert.margin > 0
    assert verify_certificate(LqBallSupport(q, delta, n), sigma, cert.a, cert.tau).valid


@SETTINGS
@given(q_values, st.floats(0.3, 2.0), st.integers(1, 2), st.floats(1.0, 3.0))
def test_ball_recipe_outside_regime(q, delta, n, frac):
    root = 1.0 if math.isinf(q) else n ** (1.0 / q)
    sigma = frac * math.pi * root / delta
    if delta * sigma < math.pi * root:
        return
    assert ball_certificate(q, delta, n, sigma) is None


@SETTINGS
@given(st.floats(0.5, 2.0), st.floats(0.05, 0.95),
       st.lists(st.integers(-3, 3), min_size=2, max_size=2),
       st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2))
def test_certificate_shift_invariance(delta, frac, omega, offset):
    support = LqBallSupport(2.0, delta, 2)
    sigma = frac * math.pi * math.sqrt(2) / delta
    tau = np.full(2, 2 * math.pi / sigma)
    a = np.asarray(offset) * tau
    base = verify_certificate(support, sigma, a, tau)
    shifted = verify_certificate(support, sigma, a + tau * np.asarray(omega), tau)
    assert base.valid == shifted.valid
    assert shifted.margin == pytest.approx(base.margin, abs=1e-9)


@SETTINGS
@given(st.floats(0.3, 1.5), st.floats(0.2, 1.5), st.floats(0.2, 1.5), st.floats(0, 1), st.floats(0, 1))
def test_certificate_permutation_invariance(delta, t1, t2, u1, u2):
    support = LqBallSupport(3.0, delta, 2)
    tau = np.array([t1, t2])
    a = np.array([u1, u2]) * tau
    sigma = 2 * math.pi / max(t1, t2)
    one = verify_certificate(support, sigma, a, tau)
    two = verify_certificate(support, sigma, a[::-1], tau[::-1])
    assert one.valid == two.valid
    assert one.margin == pytest.approx(two.margin, abs=1e-12)


@SETTINGS
@given(st.integers(1, 3), st.floats(0.5, 6.0), st.lists(finite, min_size=3, max_size=3), st.permutations(range(3)))
def test_xi_even_and_symmetric(n, sigma, x, perm):
    p = PerturbationParams.for_sigma(n, sigma, rho=0.7)
    x = np.array(x[:n])
    perm = [i for i in perm if i < n]
    flips = np.where(np.arange(n) % 2 == 0, -1.0, 1.0)
    v = xi_eval(x, p)
    assert xi_eval(x * flips, p) == pytest.approx(v, rel=1e-13, abs=1e-300)
    assert xi_eval(x[perm], p) == pytest.approx(v, rel=1e-13, abs=1e-300)


@SETTINGS
@given(st.integers(1, 3), st.floats(0.5, 6.0), st.lists(finite, min_size=3, max_size=3))
def test_xi_sign(n, sigma, x):
    p = PerturbationParams.for_sigma(n, sigma, rho=1.0)
    x = np.array(x[:n])
    v = xi_eval(x, p)
    r = np.linalg.norm(x)
    if r > p.A * (1 + 1e-12):
        assert v <= 0
    elif r < p.A * (1 - 1e-12):
        assert v >= 0


@SETTINGS
@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=2, max_size=2),
       st.lists(st.integers(-5, 5), min_size=2, max_size=2))
def test_delta_n_shift(z, k):
    z = np.array(z)
    k = np.array(k)
    expected = (-1.0) ** k.sum() * delta_n(z)
    assert abs(delta_n(z + k) - expected) <= 1e-9 * max(1.0, abs(expected))


@SETTINGS
@given(st.integers(1, 2), st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_csv_round_trip(tmp_path_factory, dim, count, seed):
    rng = np.random.default_rng(seed)
    axes = tuple(Axis(float(-rng.uniform(0.5, 3)), float(rng.uniform(0.5, 3)), count) for _ in range(dim))
    g = GridFunction(axes, rng.normal(size=(count,) * dim))
    path = tmp_path_factory.mktemp("csv") / "g.csv"
    g.to_csv(path)
    back = GridFunction.from_csv(path)
    assert np.array_equal(back.values, g.values)
    assert np.allclose(back.points(), g.points(), rtol=0, atol=1e-15)


@pytest.mark.parametrize("sigma, x", [(2.0, 0.3), (3.0, 1.1)])
def test_poisson_error_decreases_with_terms(sigma, x):
    errs = []
    for terms in (1, 2, 4, 8, 16, 32, 64):
        r = poisson_check(lambda t: xi_base(t[:, 0], sigma), lambda y: xi_hat_base(y[:, 0], sigma),
                          [math.pi], [x], terms)
        errs.append(r.absError)
    floor = 1e-15
    assert all(b <= a or b <= floor for a, b in zip(errs, errs[1:]))
    # xi1 decays like |t|^-4, so the lattice tail shrinks like terms^-3
    assert errs[-1] <= errs[-2] / 6
