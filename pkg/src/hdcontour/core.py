"""
Domain types shared across the package and basic grid arithmetic.

Densities live at cell centers of a regular 2-D grid; the first array axis
runs over significant wave height (Hs, meters) and the second over wind
speed (V, meters per second).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterator, Literal, Optional, Sequence

import numpy as np

HOURS_PER_YEAR = 365.25 * 24.0

#: Tolerance on the total mass of any density grid produced by a fit.
MASS_TOLERANCE = 1e-2


class HdContourError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(HdContourError, ValueError):
    pass


class OutOfGrid(HdContourError, ValueError):
    pass


def _finite_nonneg(name, value):
    if not math.isfinite(value) or value < 0:
        raise InvalidParameter(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class Sample:
    hs: float
    v: float
    t: Optional[datetime] = None

    def __post_init__(self):
        _finite_nonneg("hs", self.hs)
        _finite_nonneg("v", self.v)


class Dataset:
    """
    Ordered (Hs, V) samples of a hindcast series.

    Parameters
    ----------
    hs, v : array_like
        Significant wave height [m] and wind speed [m/s], same length >= 2.
    state_duration_hours : float
        Duration represented by one sample (sea state length), default 1 h.
    times : sequence of datetime, optional
        Timestamps, one per sample.
    rejected : sequence of (line, reason), optional
        Input rows dropped while loading, kept for reporting.

    The arrays are stored read-only.
    """

    def __init__(self, hs, v, state_duration_hours: float = 1.0, times: Optional[Sequence] = None,
                 rejected: Sequence = ()):
        hs = np.array(hs, dtype=float)
        v = np.array(v, dtype=float)
        if hs.ndim != 1 or hs.shape != v.shape:
            raise InvalidParameter("hs and v must be 1-D arrays of equal length")
        if hs.size < 2:
            raise InvalidParameter(f"a dataset needs at least 2 samples, got {hs.size}")
        for name, arr in (("hs", hs), ("v", v)):
            if not np.all(np.isfinite(arr)):
                raise InvalidParameter(f"{name} contains NaN or infinite values")
            if np.any(arr < 0):
                raise InvalidParameter(f"{name} contains negative values")
        if not (math.isfinite(state_duration_hours) and state_duration_hours > 0):
            raise InvalidParameter("state_duration_hours must be > 0")
        if times is not None:
            times = tuple(times)
            if len(times) != hs.size:
                raise InvalidParameter("times must have one entry per sample")
        hs.setflags(write=False)
        v.setflags(write=False)
        self.hs = hs
        self.v = v
        self.state_duration_hours = float(state_duration_hours)
        self.times = times
        self.rejected = tuple(rejected)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], state_duration_hours: float = 1.0) -> "Dataset":
        times = [s.t for s in samples]
        return cls(
            [s.hs for s in samples],
            [s.v for s in samples],
            state_duration_hours,
            times if any(t is not None for t in times) else None,
        )

    @property
    def n(self) -> int:
        return int(self.hs.size)

    def __len__(self):
        return self.n

    def __iter__(self) -> Iterator[Sample]:
        for i in range(self.n):
            yield Sample(float(self.hs[i]), float(self.v[i]), self.times[i] if self.times else None)

    @property
    def samples(self) -> list:
        return list(self)

    def median(self) -> tuple:
        return float(np.median(self.hs)), float(np.median(self.v))

    def __repr__(self):
        return f"Dataset(n={self.n}, state_duration_hours={self.state_duration_hours})"


@dataclass(frozen=True)
class GridAxis:
    """Regular axis of cell centers ``origin + i * step`` for ``i < count``."""

    origin: float
    step: float
    count: int

    def __post_init__(self):
        if not math.isfinite(self.origin):
            raise InvalidParameter("axis origin must be finite")
        if not (math.isfinite(self.step) and self.step > 0):
            raise InvalidParameter(f"axis step must be > 0, got {self.step!r}")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidParameter(f"axis count must be an integer >= 2, got {self.count!r}")

    @classmethod
    def spanning(cls, lo: float, hi: float, step: float) -> "GridAxis":
        """Axis whose cell centers run from ``lo`` to ``hi`` (both on the lattice)."""
        count = int(round((hi - lo) / step)) + 1
        return cls(float(lo), float(step), max(count, 2))

    @property
    def coords(self) -> np.ndarray:
        return self.origin + np.arange(self.count) * self.step

    @property
    def last(self) -> float:
        return self.origin + (self.count - 1) * self.step


class DensityGrid:
    """
    Nonnegative density field sampled at cell centers.

    ``values[i, j]`` is the density at ``(hs_axis.coords[i], v_axis.coords[j])``
    in units of 1/(m * m/s).
    """

    def __init__(self, hs_axis: GridAxis, v_axis: GridAxis, values):
        values = np.array(values, dtype=float)
        if values.shape != (hs_axis.count, v_axis.count):
            raise InvalidParameter(
                f"values shape {values.shape} does not match axes ({hs_axis.count}, {v_axis.count})"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("density values must be finite")
        if np.any(values < 0):
            raise InvalidParameter("density values must be nonnegative")
        values.setflags(write=False)
        self.hs_axis = hs_axis
        self.v_axis = v_axis
        self.values = values

    @property
    def cell_area(self) -> float:
        return self.hs_axis.step * self.v_axis.step

    def scaled(self, factor: float) -> "DensityGrid":
        return DensityGrid(self.hs_axis, self.v_axis, self.values * factor)

    def contains(self, hs, v):
        hs = np.asarray(hs, dtype=float)
        v = np.asarray(v, dtype=float)
        return (
            (hs >= self.hs_axis.origin)
            & (hs <= self.hs_axis.last)
            & (v >= self.v_axis.origin)
            & (v <= self.v_axis.last)
        )

    def __repr__(self):
        return (
            f"DensityGrid(hs={self.hs_axis.origin}+{self.hs_axis.step}x{self.hs_axis.count}, "
            f"v={self.v_axis.origin}+{self.v_axis.step}x{self.v_axis.count})"
        )


@dataclass(frozen=True)
class ExceedanceProbability:
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and 0.0 < self.alpha < 1.0):
            raise InvalidParameter(f"exceedance probability must be in (0, 1), got {self.alpha!r}")

    def __float__(self):
        return self.alpha


@dataclass(frozen=True)
class ReturnPeriodSpec:
    years: float

    def __post_init__(self):
        if not (math.isfinite(self.years) and self.years > 0):
            raise InvalidParameter(f"return period must be > 0 years, got {self.years!r}")


@dataclass(frozen=True)
class Contour:
    """
    Level set ``f = threshold`` as closed polylines.

    Each loop is an ``(m, 2)`` array of (hs, v) vertices whose first vertex is
    repeated as the last one. ``boundary`` flags loops that were closed along
    the edge of the density grid.
    """

    threshold: float
    alpha: ExceedanceProbability
    loops: tuple
    boundary: tuple = field(default=())

    def __post_init__(self):
        if not (math.isfinite(self.threshold) and self.threshold >= 0):
            raise InvalidParameter("contour threshold must be finite and >= 0")
        loops = []
        for loop in self.loops:
            loop = np.array(loop, dtype=float)
            if loop.ndim != 2 or loop.shape[1] != 2 or loop.shape[0] < 4:
                raise InvalidParameter("each loop needs >= 3 distinct vertices plus the closing vertex")
            if not np.array_equal(loop[0], loop[-1]):
                raise InvalidParameter("loops must repeat their first vertex as the last one")
            loop.setflags(write=False)
            loops.append(loop)
        object.__setattr__(self, "loops", tuple(loops))
        boundary = tuple(bool(b) for b in self.boundary) or (False,) * len(loops)
        if len(boundary) != len(loops):
            raise InvalidParameter("one boundary flag per loop is required")
        object.__setattr__(self, "boundary", boundary)

    @property
    def is_empty(self) -> bool:
        return not self.loops

    def vertices(self) -> np.ndarray:
        """All vertices of all loops stacked (closing vertices dropped)."""
        if not self.loops:
            return np.empty((0, 2))
        return np.concatenate([loop[:-1] for loop in self.loops])


ConditionLabel = str  # "angle(<deg>)", "max_hs" or "max_v"


@dataclass(frozen=True)
class DesignCondition:
    label: ConditionLabel
    hs: float
    v: float

    def __post_init__(self):
        if not (self.label in ("max_hs", "max_v") or self.label.startswith("angle(")):
            raise InvalidParameter(f"unknown design condition label {self.label!r}")


def total_mass(grid: DensityGrid) -> float:
    """Midpoint-rule integral of the density over the grid."""
    return float(grid.values.sum() * grid.cell_area)


def interpolate(grid: DensityGrid, hs, v):
    """
    Bilinear interpolation between the four surrounding cell centers.

    Accepts scalars or arrays. Raises :class:`OutOfGrid` if any query lies
    outside the bounding box of the cell centers.
    """
    scalar = np.ndim(hs) == 0 and np.ndim(v) == 0
    hs = np.atleast_1d(np.asarray(hs, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(grid.contains(hs, v)):
        bad = np.flatnonzero(~grid.contains(hs, v))[0]
        raise OutOfGrid(f"query ({hs.flat[bad]}, {v.flat[bad]}) lies outside the density grid")
    out = _bilinear(grid, hs, v)
    return float(out[0]) if scalar else out


def _bilinear(grid: DensityGrid, hs: np.ndarray, v: np.ndarray) -> np.ndarray:
    ax, ay = grid.hs_axis, grid.v_axis
    x = (hs - ax.origin) / ax.step
    y = (v - ay.origin) / ay.step
    i = np.clip(np.floor(x).astype(int), 0, ax.count - 2)
    j = np.clip(np.floor(y).astype(int), 0, ay.count - 2)
    tx = x - i
    ty = y - j
    f = grid.values
    return (
        f[i, j] * (1 - tx) * (1 - ty)
        + f[i + 1, j] * tx * (1 - ty)
        + f[i, j + 1] * (1 - tx) * ty
        + f[i + 1, j + 1] * tx * ty
    )


Axis = Literal["hs", "v"]
