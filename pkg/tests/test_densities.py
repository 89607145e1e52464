import json
import math

import numpy as np
import pytest

from charext.densities import (
    DensitySpec,
    GridSupport,
    IntervalSupport,
    LqBallSupport,
    char_fn,
    eval_density,
    integrate_density,
    normalize,
)
from charext.errors import NotNormalizedError
from charext.grid import Axis, GridFunction

import reference

# oracle: nested adaptive quadrature of the raw tent over the l^4 unit disc
MASS_Q4_N2 = 1.2360497848432277


def test_triangular_values():
    spec = normalize(DensitySpec.triangular())
    assert eval_density(spec, 0.0) == 1.0
    assert eval_density(spec, 2.0) == 0.0
    assert spec.normalization == 1.0


def test_unnormalized_raises():
    with pytest.raises(NotNormalizedError, match="call normalize first"):
        eval_density(DensitySpec.triangular(), 0.0)
    with pytest.raises(NotNormalizedError, match="call normalize first"):
        char_fn(DensitySpec.triangular(), 1.0)


def test_ball_normalization_constants():
    assert normalize(DensitySpec.ball(2, 1, 1)).normalization == pytest.approx(1.0, rel=1e-14)
    spec = normalize(DensitySpec.ball(2, 1, 2))
    assert spec.normalization == pytest.approx(3.0 / math.pi, rel=1e-14)
    assert 1.0 / spec.normalization == pytest.approx(reference.tent_ball_mass(2, 1, 2), rel=1e-9)
    q4 = normalize(DensitySpec.ball(4, 1, 2))
    assert 1.0 / q4.normalization == pytest.approx(MASS_Q4_N2, rel=1e-9)
    cube = normalize(DensitySpec.ball(math.inf, 1, 2))
    assert 1.0 / cube.normalization == pytest.approx(4.0 / 3.0, rel=1e-14)


def test_ball_value_at_example_point():
    spec = normalize(DensitySpec.ball(2, 1, 2))
    val = eval_density(spec, [0.5, 0.5])
    assert val == pytest.approx(3.0 / math.pi * (1.0 - math.sqrt(0.5)), rel=1e-14)


@pytest.mark.parametrize("spec", [
    DensitySpec.triangular(),
    DensitySpec.ball(2, 1, 2),
    DensitySpec.ball(math.inf, 0.7, 2),
    DensitySpec.ball(3, 1.3, 2),
    DensitySpec.ball(2, 1, 3),
])
def test_normalized_mass_by_quadrature(spec):
    spec = normalize(spec)
    tol = 1e-8 if spec.dim <= 2 else 1e-6
    assert integrate_density(spec) == pytest.approx(1.0, abs=tol)
    assert abs(char_fn(spec, np.zeros(spec.dim)) - 1.0) <= tol


def test_power_convention_radius():
    spec = DensitySpec.ball(2, 4.0, 2, convention="power")
    assert spec.radius == pytest.approx(2.0)
    assert DensitySpec.ball(math.inf, 4.0, 2, convention="power").radius == 4.0


def test_triangular_characteristic_function():
    spec = normalize(DensitySpec.triangular())
    x = np.linspace(-20, 20, 801)
    assert np.max(np.abs(char_fn(spec, x) - reference.triangular_cf(x))) <= 1e-10
    assert char_fn(spec, math.pi) == pytest.approx(4.0 / math.pi ** 2, abs=1e-12)


def test_hermitian_symmetry_and_bound():
    rng = np.random.default_rng(1)
    spec = normalize(DensitySpec.ball(3, 1.2, 2))
    x = rng.normal(scale=5.0, size=(50, 2))
    f = char_fn(spec, x)
    assert np.max(np.abs(char_fn(spec, -x) - np.conj(f))) <= 1e-13
    assert np.all(np.abs(f) <= 1.0 + 1e-8)


def test_support_distances():
    box = IntervalSupport((-1.0,), (1.0,))
    assert box.distance(np.array([[1.045]]))[0] == pytest.approx(0.045)
    disc = LqBallSupport(2.0, 1.0, 2)
    p = np.array([0.75, 0.75])
    assert disc.distance(p[None])[0] == pytest.approx(reference.ball_distance_sampled(p, 1.0), abs=1e-8)
    assert disc.distance(np.array([[0.1, 0.2]]))[0] == 0.0
    cube = LqBallSupport(math.inf, 1.0, 2)
    assert cube.distance(np.array([[1.5, 0.0]]))[0] == pytest.approx(0.5)


def test_tabulated_density_and_support():
    axes = (Axis(-2.0, 2.0, 9),)
    vals = np.maximum(1.0 - np.abs(np.linspace(-2, 2, 9)), 0.0)
    spec = normalize(DensitySpec.tabulated(GridFunction(axes, vals)))
    # the tent is reproduced exactly by linear interpolation between knots
    assert spec.normalization == pytest.approx(1.0, rel=1e-12)
    assert eval_density(spec, 0.25) == pytest.approx(0.75)
    support = spec.support()
    assert isinstance(support, GridSupport)
    lo, hi = support.bounding_box
    # knots at +-1 are zero, so the positive cells span [-1, 1]
    assert lo[0] == -1.0 and hi[0] == 1.0
    assert support.distance(np.array([[1.75]]))[0] == pytest.approx(0.75)


def test_tabulated_rejects_bad_grids():
    axes = (Axis(-1.0, 1.0, 5),)
    with pytest.raises(ValueError, match="negative"):
        normalize(DensitySpec.tabulated(GridFunction(axes, np.array([0, 1, -1, 1, 0.0]))))
    with pytest.raises(ValueError, match="zero mass"):
        normalize(DensitySpec.tabulated(GridFunction(axes, np.zeros(5))))


def test_json_round_trip(tmp_path):
    spec = normalize(DensitySpec.ball(math.inf, 0.8, 2))
    doc = json.loads(json.dumps(spec.to_dict()))
    assert doc["params"]["q"] == "inf"
    back = DensitySpec.from_dict(doc)
    assert back.q == math.inf and back.normalization == spec.normalization

    grid = GridFunction((Axis(-1.0, 1.0, 5),), np.array([0, 0.5, 1, 0.5, 0.0]))
    grid.to_csv(tmp_path / "g.csv")
    tab = DensitySpec.tabulated(GridFunction.from_csv(tmp_path / "g.csv"), source="g.csv")
    back = DensitySpec.from_dict(json.loads(json.dumps(tab.to_dict())), base_dir=tmp_path)
    assert np.array_equal(back.params["grid"].values, grid.values)
