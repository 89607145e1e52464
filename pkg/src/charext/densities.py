"""Density families on R^n, their supports, and characteristic functions.

Three families are provided:

* ``triangular``: the 1-D tent ``1 - |t|`` on ``[-1, 1]``.
* ``ball``: the tent ``c (1 - |t|_q / r)_+`` on the open l^q ball of radius ``r``.
* ``tabulated``: a sampled density, multilinearly interpolated.

The characteristic function uses the sign convention
``f(x) = int exp(-i (x, t)) phi(t) dt``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import NotNormalizedError, QuadratureBudgetError, SupportError
from .grid import Axis, GridFunction
from .quadrature import composite_rule, gauss_legendre, tensor_rule

FAMILIES = ("triangular", "ball", "tabulated")
CLAMP_FLOOR = 1e-15
DEFAULT_NODES = 256


def tol_quad(dim):
    return 1e-8 if dim <= 2 else 1e-6


def default_nodes(dim):
    return DEFAULT_NODES if dim <= 2 else 64


# --------------------------------------------------------------------------
# supports


class SupportSpec:
    """Closed support of a density together with an axis-aligned bounding box.

    ``distance`` is the l^inf distance from points to the closed support
    (zero on the support).
    """

    dim: int

    @property
    def bounding_box(self):
        raise NotImplementedError

    def distance(self, points):
        raise NotImplementedError

    def contains(self, points):
        return self.distance(points) <= 0.0


@dataclass(frozen=True)
class IntervalSupport(SupportSpec):
    """Product of closed intervals ``[lo_k, hi_k]``."""

    lo: tuple
    hi: tuple

    @property
    def dim(self):
        return len(self.lo)

    @property
    def bounding_box(self):
        return np.array(self.lo, dtype=float), np.array(self.hi, dtype=float)

    def distance(self, points):
        p = np.asarray(points, dtype=float)
        lo, hi = self.bounding_box
        gap = np.maximum(np.maximum(lo - p, p - hi), 0.0)
        return gap.max(axis=-1)


@dataclass(frozen=True)
class LqBallSupport(SupportSpec):
    """Closed l^q ball ``{|t|_q <= radius}`` in R^dim, ``2 <= q <= inf``."""

    q: float
    radius: float
    dim: int

    @property
    def bounding_box(self):
        return np.full(self.dim, -self.radius), np.full(self.dim, self.radius)

    def norm(self, points):
        return _lq_norm(np.asarray(points, dtype=float), self.q)

    def contains(self, points):
        return self.norm(points) <= self.radius

    def distance(self, points):
        # smallest t with min_{|x - p|_inf <= t} |x|_q <= radius; the inner
        # minimum shrinks each |p_k| by t (clipped at 0), so bisect on t.
        p = np.abs(np.asarray(points, dtype=float))
        out = np.zeros(p.shape[:-1])
        outside = _lq_norm(p, self.q) > self.radius
        if not np.any(outside):
            return out
        po = p[outside]
        if math.isinf(self.q):
            out[outside] = po.max(axis=-1) - self.radius
            return out
        lo = np.zeros(po.shape[0])
        hi = po.max(axis=-1)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            shrunk = _lq_norm(np.maximum(po - mid[:, None], 0.0), self.q)
            above = shrunk > self.radius
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out[outside] = 0.5 * (lo + hi)
        return out


@dataclass(frozen=True, eq=False)
class GridSupport(SupportSpec):
    """Support of a multilinearly interpolated sampled density.

    The interpolant is positive inside every grid cell that has a positive
    vertex, so the closed support is the union of those closed cells.
    """

    grid: GridFunction
    _cells: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pos = self.grid.values > 0
        cell = np.zeros(tuple(c - 1 for c in pos.shape), dtype=bool)
        n = pos.ndim
        for corner in np.ndindex(*(2,) * n):
            sl = tuple(slice(c, c + s - 1) for c, s in zip(corner, pos.shape))
            cell |= pos[sl]
        idx = np.argwhere(cell)
        coords = [self.grid.coords(k) for k in range(n)]
        lo = np.stack([coords[k][idx[:, k]] for k in range(n)], axis=-1) if idx.size else np.zeros((0, n))
        hi = np.stack([coords[k][idx[:, k] + 1] for k in range(n)], axis=-1) if idx.size else np.zeros((0, n))
        object.__setattr__(self, "_cells", (lo, hi))

    @property
    def dim(self):
        return self.grid.dim

    @property
    def bounding_box(self):
        lo, hi = self._cells
        if lo.shape[0] == 0:
            raise SupportError("tabulated density is identically zero")
        return lo.min(axis=0), hi.max(axis=0)

    def distance(self, points):
        p = np.asarray(points, dtype=float)
        flat = p.reshape(-1, self.dim)
        lo, hi = self._cells
        out = np.empty(flat.shape[0])
        chunk = max(1, 2_000_000 // max(lo.shape[0], 1))
        for s in range(0, flat.shape[0], chunk):
            q = flat[s:s + chunk, None, :]
            gap = np.maximum(np.maximum(lo[None] - q, q - hi[None]), 0.0).max(axis=-1)
            out[s:s + chunk] = gap.min(axis=1)
        return out.reshape(p.shape[:-1])


def _lq_norm(p, q):
    a = np.abs(p)
    if math.isinf(q):
        return a.max(axis=-1)
    # scale by the max to avoid overflow in |t|^q
    m = a.max(axis=-1)
    safe = np.where(m > 0, m, 1.0)
    return m * np.sum((a / safe[..., None]) ** q, axis=-1) ** (1.0 / q)


# --------------------------------------------------------------------------
# density specs


@dataclass(eq=False)
class DensitySpec:
    """A continuous probability density on R^dim.

    ``normalization`` is ``None`` until :func:`normalize` has recorded the
    constant that makes the total mass one.
    """

    family: str
    dim: int
    params: dict = field(default_factory=dict)
    normalization: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown density family {self.family!r}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if self.family == "triangular" and self.dim != 1:
            raise ValueError("the triangular density is one-dimensional")
        if self.family == "ball":
            q = float(self.params["q"])
            if not q >= 2:
                raise ValueError("ball exponent q must lie in [2, inf]")
            if not float(self.params["delta"]) > 0:
                raise ValueError("ball size delta must be positive")
            if self.params.get("convention", "radius") not in ("radius", "power"):
                raise ValueError("ball convention must be 'radius' or 'power'")
        if self.family == "tabulated":
            grid = self.params["grid"]
            if grid.dim != self.dim:
                raise ValueError("tabulated grid dimension mismatch")

    # convenience constructors

    @classmethod
    def triangular(cls):
        return cls("triangular", 1, {})

    @classmethod
    def ball(cls, q=2.0, delta=1.0, dim=1, convention="radius"):
        return cls("ball", dim, {"q": float(q), "delta": float(delta), "convention": convention})

    @classmethod
    def tabulated(cls, grid, source=None):
        params = {"grid": grid, "interpolation": "multilinear"}
        if source is not None:
            params["source"] = str(source)
        return cls("tabulated", grid.dim, params)

    @property
    def is_normalized(self):
        return self.normalization is not None

    @property
    def q(self):
        return float(self.params["q"])

    @property
    def radius(self):
        """Radius of the support ball (``ball`` family only).

        Under the ``power`` convention the set ``sum |t_k|^q < delta`` is the
        l^q ball of radius ``delta**(1/q)``.
        """
        delta = float(self.params["delta"])
        if self.params.get("convention", "radius") == "power" and not math.isinf(self.q):
            return delta ** (1.0 / self.q)
        return delta

    def support(self):
        if self.family == "triangular":
            return IntervalSupport((-1.0,), (1.0,))
        if self.family == "ball":
            return LqBallSupport(self.q, self.radius, self.dim)
        return GridSupport(self.params["grid"])

    def raw(self, t):
        """Unnormalized density shape at points ``t`` of shape ``(..., dim)``."""
        t = np.asarray(t, dtype=float)
        if self.family == "triangular":
            return np.maximum(1.0 - np.abs(t[..., 0]), 0.0)
        if self.family == "ball":
            return np.maximum(1.0 - _lq_norm(t, self.q) / self.radius, 0.0)
        grid = self.params["grid"]
        interp = RegularGridInterpolator(
            [grid.coords(k) for k in range(self.dim)], grid.values,
            method="linear", bounds_error=False, fill_value=0.0,
        )
        vals = interp(t.reshape(-1, self.dim)).reshape(t.shape[:-1])
        return np.where(vals < CLAMP_FLOOR, 0.0, vals)

    def raw_mass(self, nodes=None):
        if self.family == "triangular":
            return 1.0
        if self.family == "ball":
            # int (1 - |t|_q / r)_+ dt = vol(B_q(r)) / (n + 1)
            n, q, r = self.dim, self.q, self.radius
            if math.isinf(q):
                vol = (2.0 * r) ** n
            else:
                vol = (2.0 * math.gamma(1.0 + 1.0 / q)) ** n / math.gamma(1.0 + n / q) * r ** n
            return vol / (n + 1)
        pts, w, _ = density_rule(self, nodes)
        return float(w @ self.raw(pts))

    def to_dict(self):
        params = dict(self.params)
        if self.family == "ball":
            params["q"] = "inf" if math.isinf(self.q) else self.q
        if self.family == "tabulated":
            grid = params.pop("grid")
            if "source" not in params:
                params["axes"] = [ax.to_dict() for ax in grid.axes]
                params["values"] = grid.values.ravel().tolist()
        return {"family": self.family, "dim": self.dim, "params": params,
                "normalization": self.normalization}

    @classmethod
    def from_dict(cls, doc, base_dir=None):
        family = doc["family"]
        dim = int(doc["dim"])
        params = dict(doc.get("params", {}))
        if family == "ball":
            params["q"] = float(params.get("q", 2.0))
            params["delta"] = float(params["delta"])
            params.setdefault("convention", "radius")
        if family == "tabulated":
            if "source" in params:
                src = Path(params["source"])
                if base_dir is not None and not src.is_absolute():
                    src = Path(base_dir) / src
                params["grid"] = GridFunction.from_csv(src)
            else:
                axes = tuple(Axis(a["min"], a["max"], a["count"]) for a in params.pop("axes"))
                params["grid"] = GridFunction(axes, np.reshape(params.pop("values"), [a.count for a in axes]))
            params.setdefault("interpolation", "multilinear")
        spec = cls(family, dim, params)
        norm = doc.get("normalization")
        spec.normalization = None if norm is None else float(norm)
        return spec


# --------------------------------------------------------------------------
# quadrature adapted to the support


@dataclass(frozen=True)
class RuleInfo:
    """Resolution metadata of a density quadrature rule."""

    max_panel: float
    nodes_per_panel: int

    def max_frequency(self):
        # e^{i w t} over a panel of length L needs roughly w L / 2 < m - 10
        return max(self.nodes_per_panel - 10, self.nodes_per_panel / 2) * 2.0 / self.max_panel


def density_rule(spec, nodes=None):
    """Quadrature points and weights adapted to the density's support.

    Panels are split where the density has kinks so that Gauss-Legendre
    converges spectrally on every panel. For ball supports the rule is
    iterated: each coordinate is integrated over the chord of the ball
    left by the preceding coordinates.

    Returns
    -------
    points : ndarray, shape (M, dim)
    weights : ndarray, shape (M,)
    info : RuleInfo
    """
    nodes = default_nodes(spec.dim) if nodes is None else int(nodes)
    if nodes < 4:
        raise ValueError("need at least 4 nodes per axis")
    if spec.family == "triangular":
        m = nodes // 2
        x, w = composite_rule([-1.0, 0.0, 1.0], m)
        return x[:, None], w, RuleInfo(1.0, m)
    if spec.family == "ball":
        return _ball_rule(spec.q, spec.radius, spec.dim, nodes)
    return _grid_rule(spec.params["grid"], spec.support(), nodes)


def _ball_rule(q, r, n, nodes):
    finite = not math.isinf(q)
    panels = 2 if finite else 4
    m = max(nodes // panels, 2)
    t, wref = gauss_legendre(m)
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    for k in range(n):
        if k == 0:
            rem = np.full(pts.shape[0], r)
            kink = np.zeros_like(rem)
        elif finite:
            rem = np.maximum(r ** q - np.sum(np.abs(pts) ** q, axis=1), 0.0) ** (1.0 / q)
        else:
            rem = np.full(pts.shape[0], r)
            kink = np.minimum(np.abs(pts).max(axis=1), r)
        if finite:
            breaks = np.stack([-rem, np.zeros_like(rem), rem], axis=1)
        else:
            breaks = np.stack([-rem, -kink, np.zeros_like(rem), kink, rem], axis=1)
        lo, hi = breaks[:, :-1, None], breaks[:, 1:, None]
        half = 0.5 * (hi - lo)
        new = (half * t + 0.5 * (lo + hi)).reshape(pts.shape[0], -1)
        neww = (half * wref).reshape(pts.shape[0], -1)
        per = new.shape[1]
        pts = np.column_stack([np.repeat(pts, per, axis=0), new.ravel()])
        wts = (wts[:, None] * neww).ravel()
        keep = wts > 0
        pts, wts = pts[keep], wts[keep]
    return pts, wts, RuleInfo(float(r), m)


def _grid_rule(grid, support, nodes):
    lo, hi = support.bounding_box
    rules = []
    max_panel = 0.0
    m_min = None
    for k in range(grid.dim):
        c = grid.coords(k)
        breaks = c[(c >= lo[k] - 1e-12) & (c <= hi[k] + 1e-12)]
        cells = max(breaks.size - 1, 1)
        m = max(2, math.ceil(nodes / cells))
        rules.append(composite_rule(breaks, m))
        max_panel = max(max_panel, float(np.max(np.diff(breaks))))
        m_min = m if m_min is None else min(m_min, m)
    pts, w = tensor_rule(rules)
    return pts, w, RuleInfo(max_panel, m_min)


# --------------------------------------------------------------------------
# operations


def _as_points(spec, t):
    t = np.asarray(t, dtype=float)
    if spec.dim == 1 and (t.ndim == 0 or t.shape[-1] != 1):
        t = t[..., None]
    if t.shape[-1] != spec.dim:
        raise ValueError(f"points must have trailing dimension {spec.dim}")
    if not np.all(np.isfinite(t)):
        raise ValueError("points must be finite")
    return t


def eval_density(spec, t):
    """Normalized density values at ``t`` (shape ``(..., dim)``; scalars allowed in 1-D)."""
    if not spec.is_normalized:
        raise NotNormalizedError("density is not normalized: call normalize first")
    pts = _as_points(spec, t)
    return spec.normalization * spec.raw(pts)


def normalize(spec, nodes=None):
    """Return a copy of ``spec`` with its normalization constant recorded.

    The raw mass is taken in closed form for the triangular and ball
    families and by quadrature for tabulated densities.
    """
    if spec.family == "tabulated":
        vals = spec.params["grid"].values
        if np.any(vals < -CLAMP_FLOOR):
            raise ValueError("tabulated density has negative values")
        if not np.any(vals > CLAMP_FLOOR):
            raise ValueError("tabulated density has zero mass")
    mass = spec.raw_mass(nodes)
    if not mass > 0:
        raise ValueError("density has zero mass")
    return dataclasses.replace(spec, params=dict(spec.params), normalization=1.0 / mass)


def char_fn(spec, x, nodes=None, chunk=64):
    """Characteristic function ``f(x) = int exp(-i (x, t)) phi(t) dt``.

    Evaluated by the support-adapted Gauss-Legendre rule of
    :func:`density_rule`. Raises :class:`QuadratureBudgetError` when a
    frequency exceeds what the rule resolves.
    """
    if not spec.is_normalized:
        raise NotNormalizedError("density is not normalized: call normalize first")
    x = _as_points(spec, x)
    pts, w, info = density_rule(spec, nodes)
    if x.size and np.abs(x).max() > info.max_frequency():
        raise QuadratureBudgetError(
            f"|x| up to {np.abs(x).max():.4g} exceeds the resolvable frequency "
            f"{info.max_frequency():.4g}; increase the node count"
        )
    mass = w * eval_density(spec, pts)
    flat = x.reshape(-1, spec.dim)
    out = np.empty(flat.shape[0], dtype=complex)
    for s in range(0, flat.shape[0], chunk):
        phase = flat[s:s + chunk] @ pts.T
        out[s:s + chunk] = np.exp(-1j * phase) @ mass
    return out.reshape(x.shape[:-1])


def integrate_density(spec, nodes=None):
    """Total mass of the normalized density by quadrature."""
    pts, w, _ = density_rule(spec, nodes)
    return float(w @ eval_density(spec, pts))
