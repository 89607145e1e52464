"""Lattice-avoidance certificates for uniqueness of the extension.

A certificate is a shifted rectangular lattice ``a + tau Z^n`` with
``tau_k sigma <= 2 pi`` that misses the closed support of the density.
Its existence is a sufficient condition for the characteristic function
to be determined by its values outside the cube ``[-sigma, sigma]^n``.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import SupportError

TWO_PI = 2.0 * math.pi
SPACING_RTOL = 1e-12


@dataclass(frozen=True)
class Certificate:
    a: tuple
    tau: tuple
    margin: float
    sigma: float

    def to_dict(self):
        return {"a": list(self.a), "tau": list(self.tau), "margin": self.margin, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, doc):
        return cls(tuple(doc["a"]), tuple(doc["tau"]), float(doc["margin"]), float(doc["sigma"]))


@dataclass(frozen=True)
class CertificateCheck:
    valid: bool
    margin: float
    spacing_ok: bool


def spacing_ok(sigma, tau):
    """``tau_k * sigma <= 2 pi`` for every k (boundary accepted)."""
    tau = np.asarray(tau, dtype=float)
    return bool(np.all(tau * sigma <= TWO_PI * (1.0 + SPACING_RTOL)))


def _finite_box(support):
    try:
        lo, hi = support.bounding_box
    except (AttributeError, NotImplementedError) as exc:
        raise SupportError("compact support required") from exc
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise SupportError("compact support required")
    return lo, hi


def lattice_indices(a, tau, lo, hi):
    """Integer vectors ``w`` with ``a + tau w`` inside the box ``[lo, hi]``."""
    ranges = []
    for ak, tk, l, h in zip(a, tau, lo, hi):
        first = math.ceil((l - ak) / tk - 1e-12)
        last = math.floor((h - ak) / tk + 1e-12)
        ranges.append(range(first, last + 1))
    return np.array(list(itertools.product(*ranges)), dtype=float).reshape(-1, len(a))


def lattice_margin(support, a, tau):
    """Minimum l^inf distance from the lattice ``a + tau Z^n`` to the support.

    Lattice points are enumerated inside the bounding box widened by one
    period on every side; any farther point is at least one period away.
    """
    lo, hi = _finite_box(support)
    a = np.asarray(a, dtype=float)
    tau = np.asarray(tau, dtype=float)
    idx = lattice_indices(a, tau, lo - tau, hi + tau)
    if idx.shape[0] == 0:
        return math.inf
    return float(support.distance(a + tau * idx).min())


def verify_certificate(support, sigma, a, tau):
    """Check the spacing condition and lattice avoidance for ``(a, tau)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    if a.shape != tau.shape or a.size != support.dim:
        raise ValueError("a and tau must have one entry per dimension")
    ok = spacing_ok(sigma, tau)
    margin = lattice_margin(support, a, tau)
    return CertificateCheck(valid=ok and margin > 0, margin=margin, spacing_ok=ok)


def ball_certificate(q, delta, n, sigma):
    """Closed-form certificate for an l^q ball of radius ``delta``.

    Applies when ``delta * sigma < pi * n**(1/q)``. With ``s = delta n^(-1/q)``
    (the half-width of the cube inscribed in the ball) take
    ``tau_k = 2 s + eps`` and ``a_k = s (1 + eps)``, where ``eps`` is the
    midpoint of the feasible interval ``(0, 2 pi / sigma - 2 s]``.
    When ``s >= 1`` that offset touches the ball and the centred offset
    ``a = tau / 2`` is used instead. Returns ``None`` outside the regime.
    """
    from .densities import LqBallSupport

    q = float(q)
    root = 1.0 if math.isinf(q) else n ** (1.0 / q)
    if not (delta > 0 and sigma > 0):
        raise ValueError("delta and sigma must be positive")
    if not delta * sigma < math.pi * root:
        return None
    s = delta / root
    eps = 0.5 * (TWO_PI / sigma - 2.0 * s)
    tau = np.full(n, 2.0 * s + eps)
    support = LqBallSupport(q, delta, n)
    for a in (np.full(n, s * (1.0 + eps)), 0.5 * tau):
        check = verify_certificate(support, sigma, a, tau)
        if check.valid:
            return Certificate(tuple(a.tolist()), tuple(tau.tolist()), check.margin, float(sigma))
    return None


def find_certificate(support, sigma, tau_steps, offset_steps):
    """Grid search for a certificate maximizing the avoidance margin.

    ``tau_k`` ranges over ``(2 pi / sigma) j / tau_steps`` for
    ``j = 1..tau_steps`` and the offset over ``a_k = tau_k i / offset_steps``
    for ``i = 0..offset_steps-1``. Ties in margin go to the smaller
    ``max_k tau_k``. ``None`` means the grid held no certificate; it is not
    evidence against uniqueness.
    """
    if tau_steps < 1 or offset_steps < 1:
        raise ValueError("search grids need at least one step")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    lo, hi = _finite_box(support)
    n = support.dim
    tau_axis = TWO_PI / sigma * np.arange(1, tau_steps + 1) / tau_steps
    frac = np.array(list(itertools.product(range(offset_steps), repeat=n)), dtype=float) / offset_steps

    best = None  # (margin, -tau_inf, a, tau)
    for tau in itertools.product(tau_axis, repeat=n):
        tau = np.array(tau)
        # offsets lie in [0, tau), so cover [lo - 2 tau, hi + tau] relative to a = 0
        idx = lattice_indices(np.zeros(n), tau, lo - 2.0 * tau, hi + tau)
        offsets = frac * tau
        pts = offsets[:, None, :] + (tau * idx)[None, :, :]
        alive = ~support.contains(pts).any(axis=1)
        if not np.any(alive):
            continue
        margins = support.distance(pts[alive]).min(axis=1)
        i = int(np.argmax(margins))
        cand = float(margins[i])
        if cand <= 0:
            continue
        offsets = offsets[alive]
        key = (cand, -float(tau.max()))
        if best is None or key[0] > best[0] + 1e-12 or (abs(key[0] - best[0]) <= 1e-12 and key[1] > best[1]):
            best = (key[0], key[1], offsets[i], tau)
    if best is None:
        return None
    a, tau = best[2], best[3]
    check = verify_certificate(support, sigma, a, tau)
    if not check.valid:
        return None
    return Certificate(tuple(a.tolist()), tuple(tau.tolist()), check.margin, float(sigma))
