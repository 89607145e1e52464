"""Uniform tensor grids carrying sampled functions, with CSV round-tripping.

CSV layout: a header line, then one row per grid point. The first ``n``
columns are coordinates, the last is the value. Rows are row-major over
the axes in declared order (last axis fastest). Values are written with
17 significant digits so doubles round-trip exactly.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Axis:
    min: float
    max: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("an axis needs at least 2 points")
        if not self.max > self.min:
            raise ValueError("axis max must exceed min")

    @property
    def spacing(self):
        return (self.max - self.min) / (self.count - 1)

    def coords(self):
        return self.min + self.spacing * np.arange(self.count)

    def to_dict(self):
        return {"min": self.min, "max": self.max, "count": self.count}


@dataclass
class GridFunction:
    """Samples of a real or complex function on a uniform tensor grid.

    A ``periodic`` grid omits the endpoint ``max + spacing``, which is the
    periodic image of ``min``; its quadrature weights are uniform. A
    non-periodic grid uses trapezoid weights.
    """

    axes: tuple
    values: np.ndarray
    periodic: bool = False
    _shape: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.axes = tuple(self.axes)
        self.values = np.asarray(self.values)
        self._shape = tuple(ax.count for ax in self.axes)
        if self.values.shape != self._shape:
            raise ValueError(f"value tensor shape {self.values.shape} does not match axes {self._shape}")

    @property
    def dim(self):
        return len(self.axes)

    @property
    def spacing(self):
        return np.array([ax.spacing for ax in self.axes])

    @property
    def shape(self):
        return self._shape

    @classmethod
    def sample(cls, func, axes, periodic=False):
        """Evaluate ``func`` (points of shape ``(..., n)`` -> values) on the grid."""
        pts = cls(axes, np.zeros(tuple(ax.count for ax in axes)), periodic).points()
        return cls(axes, np.asarray(func(pts)).reshape(tuple(ax.count for ax in axes)), periodic)

    def coords(self, k):
        return self.axes[k].coords()

    def points(self):
        """All grid points as an array of shape ``(*shape, n)``."""
        mesh = np.meshgrid(*[ax.coords() for ax in self.axes], indexing="ij")
        return np.stack(mesh, axis=-1)

    def weights_1d(self, k):
        ax = self.axes[k]
        w = np.full(ax.count, ax.spacing)
        if not self.periodic:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    def integrate(self):
        out = self.values
        for k in reversed(range(self.dim)):
            out = out @ self.weights_1d(k)
        return out

    def with_values(self, values):
        return GridFunction(self.axes, values, self.periodic)

    def meta(self):
        return {"axes": [ax.to_dict() for ax in self.axes], "periodic": self.periodic}

    # --- CSV -----------------------------------------------------------

    def to_csv(self, path):
        if np.iscomplexobj(self.values):
            raise ValueError("CSV output holds real values only")
        pts = self.points().reshape(-1, self.dim)
        table = np.column_stack([pts, self.values.reshape(-1)])
        header = ",".join([f"x{k + 1}" for k in range(self.dim)] + ["value"])
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path, periodic=False):
        path = Path(path)
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if table.shape[1] < 2:
            raise ValueError(f"{path}: need coordinate columns plus a value column")
        n = table.shape[1] - 1
        axes = []
        for k in range(n):
            uniq = np.unique(table[:, k])
            axes.append(Axis(float(uniq[0]), float(uniq[-1]), int(uniq.size)))
        shape = tuple(ax.count for ax in axes)
        if int(np.prod(shape)) != table.shape[0]:
            raise ValueError(f"{path}: rows do not form a complete tensor grid")
        grid = cls(axes, table[:, -1].reshape(shape), periodic)
        expected = grid.points().reshape(-1, n)
        if not np.allclose(expected, table[:, :n], rtol=1e-12, atol=1e-12 * np.abs(expected).max()):
            raise ValueError(f"{path}: coordinates are not a uniform row-major grid")
        return grid


def fft_grid_axes(radius, count, dim):
    """Axes of the periodic grid ``-R, -R + h, ..., R - h`` with ``h = 2R/count``."""
    h = 2.0 * radius / count
    return tuple(Axis(-radius, radius - h, count) for _ in range(dim))
