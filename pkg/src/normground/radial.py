"""Radial functions on a uniform grid over [0, R_max].

Integrals carry the r^(N-1) weight and the area of the unit sphere, so every
norm below is the full R^N norm of the radially symmetric function.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

logger = logging.getLogger(__name__)

DEFAULT_R_MAX = 40.0
DEFAULT_N_NODES = 4096


class GridEscapeWarning(UserWarning):
    """Dilation pushed most of the mass outside the grid or below its resolution."""


class RadialGrid:
    """Uniform nodes r_0 = 0, ..., r_{n-1} = R_max with trapezoid weights."""

    def __init__(self, N: int = 3, R_max: float = DEFAULT_R_MAX, n: int = DEFAULT_N_NODES):
        if N < 3:
            raise ValueError("N must be at least 3")
        if n < 16:
            raise ValueError("grid needs at least 16 nodes")
        if R_max <= 0:
            raise ValueError("R_max must be positive")
        self.N = int(N)
        self.R_max = float(R_max)
        self.n = int(n)
        self.nodes = np.linspace(0.0, self.R_max, self.n)
        self.h = self.R_max / (self.n - 1)
        self.sphere_area = 2.0 * math.pi ** (self.N / 2) / math.gamma(self.N / 2)
        w = self.sphere_area * self.h * self.nodes ** (self.N - 1)
        w[-1] *= 0.5
        self.weights = w
        mid = 0.5 * (self.nodes[1:] + self.nodes[:-1])
        # kinetic quadrature on cell midpoints: sum_i S h r_{i+1/2}^{N-1} ((f_{i+1}-f_i)/h)^2
        self.mid_weights = self.sphere_area * mid ** (self.N - 1) / self.h
        for arr in (self.nodes, self.weights, self.mid_weights):
            arr.setflags(write=False)

    @property
    def key(self):
        return (self.N, self.R_max, self.n)

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"RadialGrid(N={self.N}, R_max={self.R_max}, n={self.n})"

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def field(self, values) -> "RadialField":
        return RadialField(self, values)

    def sample(self, func) -> "RadialField":
        return RadialField(self, func(self.nodes))


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        vals[-1] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def mass(self) -> float:
        return mass(self)

    def kinetic(self) -> float:
        return kinetic(self)

    def lp_norm(self, s: float) -> float:
        return lp_norm(self, s)

    def __mul__(self, c: float) -> "RadialField":
        return RadialField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class StatePair:
    u: RadialField
    v: RadialField

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ValueError("components of a state pair must share one grid")

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid

    @classmethod
    def from_arrays(cls, grid: RadialGrid, u, v) -> "StatePair":
        return cls(RadialField(grid, u), RadialField(grid, v))


def mass(f: RadialField) -> float:
    """L2 norm |f|_2 (the square root of the integral of f^2)."""
    return math.sqrt(f.grid.integrate(f.values**2))


def kinetic(f: RadialField) -> float:
    """|grad f|_2^2 from midpoint differences; symmetric at r = 0."""
    d = np.diff(f.values)
    return float(np.dot(f.grid.mid_weights, d * d))


def lp_norm(f: RadialField, s: float) -> float:
    if s < 1:
        raise ValueError("L^s norm needs s >= 1")
    return f.grid.integrate(np.abs(f.values) ** s) ** (1.0 / s)


def lp_power(f: RadialField, s: float) -> float:
    """|f|_s^s, avoiding the root/power round trip."""
    return f.grid.integrate(np.abs(f.values) ** s)


def coupling_integral(pair: StatePair, r1: float, r2: float) -> float:
    return pair.grid.integrate(np.abs(pair.u.values) ** r1 * np.abs(pair.v.values) ** r2)


def normalize_mass(f: RadialField, a: float) -> RadialField:
    m = mass(f)
    if m == 0.0:
        raise ValueError("cannot normalize the zero field")
    if m == a:
        return f
    return RadialField(f.grid, f.values * (a / m))


def core_radius(f: RadialField, fraction: float = 0.999) -> float:
    cum = np.cumsum(f.grid.weights * f.values**2)
    if cum[-1] == 0:
        return 0.0
    idx = int(np.searchsorted(cum, fraction * cum[-1]))
    return float(f.grid.nodes[min(idx, f.grid.n - 1)])


def spline(f: RadialField) -> CubicSpline:
    # zero slope at the origin encodes radial symmetry
    return CubicSpline(f.grid.nodes, f.values, bc_type=((1, 0.0), "natural"))


def dilate(f: RadialField, s: float) -> RadialField:
    """Mass-preserving dilation e^{Ns/2} f(e^s r), resampled on the same grid."""
    if s == 0.0:
        return f
    grid = f.grid
    m0 = mass(f)
    if m0 == 0.0:
        return f
    r_core = core_radius(f)
    scale = math.exp(s)
    if r_core / scale > grid.R_max:
        warnings.warn(
            f"dilation by s={s:.3g} moves the mass core (r={r_core:.3g}) beyond R_max={grid.R_max:g}",
            GridEscapeWarning,
            stacklevel=2,
        )
    elif r_core / scale < 4 * grid.h:
        warnings.warn(
            f"dilation by s={s:.3g} shrinks the mass core below four grid spacings",
            GridEscapeWarning,
            stacklevel=2,
        )
    x = grid.nodes * scale
    inside = x <= grid.R_max
    out = np.zeros_like(x)
    out[inside] = spline(f)(x[inside])
    out *= math.exp(grid.N * s / 2)
    g = RadialField(grid, out)
    m1 = mass(g)
    if m1 == 0.0:
        raise ValueError(f"dilation by s={s} left no mass on the grid")
    return RadialField(grid, g.values * (m0 / m1))


def dilate_pair(pair: StatePair, s: float) -> StatePair:
    return StatePair(dilate(pair.u, s), dilate(pair.v, s))


def write_profile(path, grid: RadialGrid, columns: dict) -> Path:
    """Write `r,<name>...` rows with 17 significant digits."""
    path = Path(path)
    names = list(columns)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["r", *names])
        arrays = [grid.nodes] + [np.asarray(columns[k].values if isinstance(columns[k], RadialField) else columns[k]) for k in names]
        for row in zip(*arrays):
            out.writerow([format(float(x), ".17g") for x in row])
    return path


def read_profile(path, N: int):
    """Read a profile CSV; returns (grid, {column: RadialField})."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "r":
        raise ValueError(f"{path}: profile must start with an 'r' column header")
    header = rows[0]
    data = np.array([[float(x) for x in row] for row in rows[1:]], dtype=float)
    r = data[:, 0]
    grid = RadialGrid(N, float(r[-1]), len(r))
    if not np.array_equal(grid.nodes, r):
        raise ValueError(f"{path}: r column is not a uniform grid starting at 0")
    fields = {name: RadialField(grid, data[:, j + 1]) for j, name in enumerate(header[1:])}
    return grid, fields
