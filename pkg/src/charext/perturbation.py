"""Band-limited, zero-mean perturbation of a ball density.

With ``b = pi / sigma`` the one-dimensional factor

    xi1(x) = (cos(sigma x / 2) / (x^2 - b^2))^2

has its transform supported in ``[-sigma, sigma]``, and so does
``xi2(x) = x^2 xi1(x)``. The perturbation

    xi(x) = rho * prod_k xi1(x_k) * (A^2 - |x|^2),   A = pi sqrt(n) / sigma,

is band-limited to the cube ``[-sigma, sigma]^n``, has zero integral, and is
negative outside the ball of radius ``A``. If the density is bounded below
on that ball, a small ``rho`` keeps ``theta = phi - xi`` nonnegative, and
``theta`` is a second density whose characteristic function equals that of
``phi`` outside the cube.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .densities import eval_density, normalize
from .errors import HypothesisViolation
from .grid import GridFunction, fft_grid_axes
from .quadrature import composite_rule, periodic_panels, richardson

DEFAULT_SAFETY = 0.9
RADIUS_FACTOR = 200
AMPLITUDE_STEPS = 201


# --------------------------------------------------------------------------
# one-dimensional factors


def xi_base(x, sigma):
    """``xi1(x) = (cos(sigma x / 2) / (x^2 - (pi/sigma)^2))^2``.

    Uses ``cos(sigma x / 2) = -sin(u)`` with ``u = sigma (|x| - b) / 2``, so
    ``xi1 = ((sigma/2) sinc(u) / (|x| + b))^2`` holds everywhere and the
    removable singularities at ``x = +-b`` need no special case.
    """
    b = math.pi / sigma
    a = np.abs(np.asarray(x, dtype=float))
    u = 0.5 * sigma * (a - b)
    # np.sinc is the normalized sinc sin(pi s) / (pi s)
    return (0.5 * sigma * np.sinc(u / math.pi) / (a + b)) ** 2


def xi_two(x, sigma):
    """``xi2(x) = x^2 xi1(x)``."""
    x = np.asarray(x, dtype=float)
    return x * x * xi_base(x, sigma)


def xi_hat_base(y, sigma):
    """Transform of ``xi1``: ``(sigma^2/4pi) [(sigma - |y|) cos(b|y|) + sin(b|y|)/b]`` on ``|y| <= sigma``."""
    b = math.pi / sigma
    a = np.abs(np.asarray(y, dtype=float))
    val = sigma ** 2 / (4.0 * math.pi) * ((sigma - a) * np.cos(b * a) + np.sin(b * a) / b)
    return np.where(a <= sigma, val, 0.0)


def xi_hat_two(y, sigma):
    """Transform of ``xi2``: ``(sigma^2/4pi) [b^2 (sigma - |y|) cos(b|y|) - b sin(b|y|)]`` on ``|y| <= sigma``."""
    b = math.pi / sigma
    a = np.abs(np.asarray(y, dtype=float))
    val = sigma ** 2 / (4.0 * math.pi) * (b * b * (sigma - a) * np.cos(b * a) - b * np.sin(b * a))
    return np.where(a <= sigma, val, 0.0)


# --------------------------------------------------------------------------
# the n-dimensional perturbation


@dataclass(frozen=True)
class PerturbationParams:
    n: int
    sigma: float
    A: float
    rho: float
    safety: float = DEFAULT_SAFETY

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.A > 0:
            raise ValueError("A must be positive")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not 0 < self.safety < 1:
            raise ValueError("safety must lie in (0, 1)")

    @classmethod
    def for_sigma(cls, n, sigma, rho=1.0, safety=DEFAULT_SAFETY):
        """Parameters with the zero-mean radius ``A = pi sqrt(n) / sigma``."""
        return cls(int(n), float(sigma), math.pi * math.sqrt(n) / sigma, float(rho), float(safety))

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc):
        return cls(int(doc["n"]), float(doc["sigma"]), float(doc["A"]), float(doc["rho"]),
                   float(doc.get("safety", DEFAULT_SAFETY)))


def _points(x, n):
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}")
    return x


def unit_profile(x, p):
    """``xi / rho``: ``prod_k xi1(x_k) (A^2 - |x|^2)``."""
    x = _points(x, p.n)
    return np.prod(xi_base(x, p.sigma), axis=-1) * (p.A ** 2 - np.sum(x * x, axis=-1))


def xi_eval(x, p):
    """The perturbation ``xi`` at points of shape ``(..., n)`` (scalars allowed for n = 1)."""
    return p.rho * unit_profile(x, p)


def xi_hat_eval(y, p):
    """Transform of ``xi`` from the one-dimensional closed forms.

    ``xi = rho [A^2 prod xi1(x_k) - sum_k xi2(x_k) prod_{j != k} xi1(x_j)]``.
    """
    y = _points(y, p.n)
    h1 = xi_hat_base(y, p.sigma)
    h2 = xi_hat_two(y, p.sigma)
    total = p.A ** 2 * np.prod(h1, axis=-1)
    for k in range(p.n):
        others = np.prod(np.delete(h1, k, axis=-1), axis=-1)
        total = total - h2[..., k] * others
    return p.rho * total


# --------------------------------------------------------------------------
# moments and the zero-mean integral


@dataclass(frozen=True)
class Moments:
    I1: float
    I2: float


def closed_moments(sigma):
    """``int xi1 = sigma^3 / (4 pi)`` and ``int xi2 = sigma pi / 4``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return Moments(sigma ** 3 / (4.0 * math.pi), sigma * math.pi / 4.0)


@dataclass(frozen=True)
class MomentQuadrature:
    """Truncated integrals at ``R`` and ``2R`` and their extrapolation."""

    radius: float
    truncated: Moments
    doubled: Moments
    extrapolated: Moments


def _truncated_1d(func, sigma, radius, nodes):
    # panels between consecutive zeros of cos(sigma x / 2)
    breaks = periodic_panels(radius, 2.0 * math.pi / sigma)
    x, w = composite_rule(breaks, nodes)
    return float(w @ func(x, sigma))


def quadrature_moments(sigma, radius_factor=RADIUS_FACTOR, nodes=24):
    """Gauss-Legendre moments of ``xi1, xi2`` over ``[-R, R]``, ``R = radius_factor pi / sigma``.

    The tails decay like ``R^-3`` for ``xi1`` and ``R^-1`` for ``xi2`` (with
    ``sigma R`` a multiple of ``2 pi`` the oscillating parts of the tails
    start one order later), so one Richardson step between ``R`` and ``2R``
    removes the leading error.
    """
    if radius_factor <= 0 or radius_factor % 2:
        raise ValueError("radius_factor must be a positive even integer")
    R = radius_factor * math.pi / sigma
    q1 = [_truncated_1d(xi_base, sigma, r, nodes) for r in (R, 2 * R)]
    q2 = [_truncated_1d(xi_two, sigma, r, nodes) for r in (R, 2 * R)]
    ext = Moments(richardson(q1, [R, 2 * R], [3]), richardson(q2, [R, 2 * R], [1]))
    return MomentQuadrature(R, Moments(q1[0], q2[0]), Moments(q1[1], q2[1]), ext)


RICHARDSON_LEVELS = (1, 2, 4)
RICHARDSON_POWERS = (1, 3)


def box_weights(ax, radius, periodic):
    """Trapezoid weights for ``[-radius, radius]`` on a grid axis, zero elsewhere."""
    t = ax.coords()
    h = ax.spacing
    w = np.where(np.abs(t) <= radius * (1 + 1e-12), h, 0.0)
    edge = np.isclose(np.abs(t), radius, rtol=1e-9)
    w[edge] = 0.5 * h
    if periodic and math.isclose(-ax.min, radius, rel_tol=1e-9):
        # the image of -R at +R is not stored; -R carries both half weights
        w[0] = h
    return w


def grid_box_integral(g, radius):
    out = g.values
    for k in reversed(range(g.dim)):
        out = out @ box_weights(g.axes[k], radius, g.periodic)
    return float(np.real(out))


def extrapolated_integral(g, levels=RICHARDSON_LEVELS, powers=RICHARDSON_POWERS):
    """Integral of a decaying grid function with Richardson in the box size.

    Sums over the nested boxes ``[-R/l, R/l]^n`` for ``l`` in ``levels``
    (``R`` is the grid half-width) and extrapolates assuming the truncation
    error expands in ``R^-p`` for ``p`` in ``powers``. Falls back to the
    plain sum when the boxes do not fall on grid lines.

    Returns
    -------
    value : float
    plain : float
        The untreated grid sum over the full box.
    """
    R = min(-ax.min for ax in g.axes)
    plain = grid_box_integral(g, R)
    radii = [R / lev for lev in levels]
    for ax in g.axes:
        t = ax.coords()
        if not all(np.any(np.isclose(t, -r, rtol=1e-9)) for r in radii):
            return plain, plain
    values = [plain] + [grid_box_integral(g, r) for r in radii[1:]]
    return richardson(values, radii, powers), plain


def zero_mean_integral(p, radius_factor=RADIUS_FACTOR, nodes=24):
    """``int xi`` by separable Gauss-Legendre quadrature with Richardson.

    Over a box ``[-r, r]^n`` the integral factorizes as
    ``rho (A^2 J1^n - n J2 J1^(n-1))`` with truncated moments ``J1, J2``.
    """
    R = radius_factor * math.pi / p.sigma
    radii = [R / lev for lev in RICHARDSON_LEVELS]
    values = []
    for r in radii:
        j1 = _truncated_1d(xi_base, p.sigma, r, nodes)
        j2 = _truncated_1d(xi_two, p.sigma, r, nodes)
        values.append(p.rho * (p.A ** 2 * j1 ** p.n - p.n * j2 * j1 ** (p.n - 1)))
    return richardson(values, radii, RICHARDSON_POWERS)


# --------------------------------------------------------------------------
# amplitude and the counterexample


def ball_grid(A, n, steps):
    """Tensor grid over ``[-A, A]^n`` pushed radially onto the closed ball of radius ``A``."""
    axis = np.linspace(-A, A, steps)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    norm = np.sqrt(np.sum(mesh * mesh, axis=1))
    scale = np.minimum(1.0, A / np.where(norm > 0, norm, 1.0))
    return mesh * scale[:, None]


def choose_amplitude(density, p, grid_steps=AMPLITUDE_STEPS):
    """Amplitude ``rho = safety * min phi / max u`` over the ball of radius ``A``.

    ``u`` is the unit profile. Outside the ball ``xi <= 0 <= phi``, so this
    keeps ``xi <= safety * phi`` wherever the grid samples the ball.
    """
    if grid_steps < 2:
        raise ValueError("grid_steps must be at least 2")
    if not density.is_normalized:
        density = normalize(density)
    pts = ball_grid(p.A, p.n, grid_steps)
    m = float(np.min(eval_density(density, pts)))
    if not m > 0:
        raise HypothesisViolation(
            f"hypothesis violated: inf φ over ball is 0 (the closed ball of radius A={p.A:.6g} "
            f"is not inside the essential support)"
        )
    M = float(np.max(unit_profile(pts, p)))
    return p.safety * m / M


@dataclass(frozen=True)
class GridSettings:
    """Output grid ``[-R, R)^n`` with ``R = radius_factor * pi / sigma``."""

    points_per_axis: int | None = None
    radius_factor: int = RADIUS_FACTOR
    amplitude_steps: int = AMPLITUDE_STEPS
    safety: float = DEFAULT_SAFETY

    def points_for(self, n):
        if self.points_per_axis is not None:
            return self.points_per_axis
        return 65536 if n == 1 else 1024 if n == 2 else 64

    def validate(self, n):
        N = self.points_for(n)
        if N < 8 or N & (N - 1):
            raise ValueError("points per axis must be a power of two (at least 8)")
        if self.radius_factor <= 0 or self.radius_factor % 8:
            raise ValueError("radius factor must be a positive multiple of 8")

    def to_dict(self):
        return {"pointsPerAxis": self.points_per_axis, "radiusFactor": self.radius_factor,
                "amplitudeSteps": self.amplitude_steps, "safety": self.safety}


@dataclass
class Counterexample:
    theta: GridFunction
    xi: GridFunction
    params: PerturbationParams
    report: object


def check_regime(density, sigma):
    """Raise when a q = 2 ball density violates ``delta * sigma > pi * sqrt(n)``."""
    if density.family == "ball" and density.q == 2.0:
        n = density.dim
        lhs = density.radius * sigma
        rhs = math.pi * math.sqrt(n)
        if not lhs > rhs:
            raise HypothesisViolation(
                f"counterexample needs delta*sigma > pi*sqrt(n): "
                f"delta*sigma = {lhs:.6g} <= pi*sqrt({n}) = {rhs:.6g}"
            )


def build_counterexample(density, sigma, grid=None, tolerances=None, probes=None):
    """Second density ``theta = phi - xi`` sharing the characteristic function outside the cube.

    Parameters
    ----------
    density : DensitySpec
        Its essential support must contain the closed Euclidean ball of
        radius ``A = pi sqrt(n) / sigma``.
    sigma : float
    grid : GridSettings, optional
    tolerances, probes : optional
        Passed to :func:`charext.oracles.verify_counterexample`.

    Returns
    -------
    Counterexample
    """
    from .oracles import verify_counterexample

    if not sigma > 0:
        raise ValueError("sigma must be positive")
    grid = GridSettings() if grid is None else grid
    n = density.dim
    grid.validate(n)
    if not density.is_normalized:
        density = normalize(density)
    check_regime(density, sigma)

    unit = PerturbationParams.for_sigma(n, sigma, 1.0, grid.safety)
    rho = choose_amplitude(density, unit, grid.amplitude_steps)
    params = dataclasses.replace(unit, rho=rho)

    R = grid.radius_factor * math.pi / sigma
    axes = fft_grid_axes(R, grid.points_for(n), n)
    xi = GridFunction.sample(lambda t: xi_eval(t, params), axes, periodic=True)
    phi = GridFunction.sample(lambda t: eval_density(density, t), axes, periodic=True)
    theta = phi.with_values(phi.values - xi.values)
    report = verify_counterexample(density, theta, params, probes=probes, tolerances=tolerances)
    return Counterexample(theta, xi, params, report)
