"""Gauss-Legendre rules (single panel, composite, tensor) and Richardson
extrapolation in the truncation radius.
"""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=64)
def _reference_rule(m):
    nodes, weights = leggauss(m)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(m, a=-1.0, b=1.0):
    """Return the ``m``-point Gauss-Legendre nodes and weights on ``[a, b]``."""
    if m < 1:
        raise ValueError("need at least one node")
    t, w = _reference_rule(int(m))
    half = 0.5 * (b - a)
    return half * t + 0.5 * (a + b), half * w


def composite_rule(breaks, m):
    """Composite Gauss-Legendre rule with ``m`` nodes on every panel.

    Parameters
    ----------
    breaks : array_like
        Increasing panel endpoints. Zero-length panels are allowed and
        contribute zero weight.
    m : int
        Nodes per panel.

    Returns
    -------
    nodes, weights : ndarray
    """
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2:
        raise ValueError("need at least two panel endpoints")
    if np.any(np.diff(breaks) < 0):
        raise ValueError("panel endpoints must be non-decreasing")
    t, w = _reference_rule(int(m))
    lo = breaks[:-1, None]
    hi = breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (half * t + 0.5 * (lo + hi)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def periodic_panels(radius, period):
    """Panel endpoints tiling ``[-radius, radius]`` with panels of length ``period``.

    ``radius`` must be (numerically) an integer multiple of ``period/2``.
    """
    count = int(round(2.0 * radius / period))
    if count < 1 or not np.isclose(count * period, 2.0 * radius, rtol=1e-9):
        raise ValueError("radius is not a multiple of half the panel period")
    return np.linspace(-radius, radius, count + 1)


def tensor_rule(rules):
    """Tensor product of 1-D rules given as ``[(nodes, weights), ...]``.

    Points are ordered row-major (last axis fastest).
    """
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = rules[0][1]
    for _, w in rules[1:]:
        weights = np.multiply.outer(weights, w)
    return points, np.ravel(weights)


def richardson(values, radii, powers):
    """Extrapolate truncated integrals ``Q(r)`` to ``r -> infinity``.

    Assumes ``Q(r) = I + sum_p c_p r**(-p)`` for the given ``powers`` and
    solves the resulting square system for ``I``. ``len(values)`` must be
    ``len(powers) + 1``.
    """
    values = np.asarray(values, dtype=float)
    radii = np.asarray(radii, dtype=float)
    powers = tuple(powers)
    if values.shape != radii.shape or values.size != len(powers) + 1:
        raise ValueError("need exactly len(powers) + 1 truncation levels")
    design = np.column_stack([np.ones_like(radii)] + [radii ** (-float(p)) for p in powers])
    return float(np.linalg.solve(design, values)[0])
