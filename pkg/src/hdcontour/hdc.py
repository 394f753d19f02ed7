"""
Highest density contours.

The contour for exceedance probability ``alpha`` is the level set
``f = f_m`` whose superlevel region ``{f >= f_m}`` holds ``1 - alpha`` of the
probability mass. A point is inside the design region iff its (bilinearly
interpolated) density is at least ``f_m``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    HOURS_PER_YEAR,
    Contour,
    DensityGrid,
    Dataset,
    ExceedanceProbability,
    HdContourError,
    ReturnPeriodSpec,
    _bilinear,
    total_mass,
)

log = logging.getLogger(__name__)


class InvalidReturnPeriod(HdContourError, ValueError):
    pass


class CoverageWarning(UserWarning):
    """Every positive cell is needed to reach the requested mass."""


@dataclass(frozen=True)
class HdcResult:
    contour: Contour
    enclosed_mass: float
    threshold: float
    alpha: ExceedanceProbability
    return_period: ReturnPeriodSpec = None
    #: mass of the grid before normalization
    grid_mass: float = 1.0
    #: normalized mass of one cell at the threshold density
    cell_mass: float = 0.0

    @property
    def mass_error(self) -> float:
        return self.enclosed_mass - (1.0 - self.alpha.alpha)


def alpha_from_return_period(spec: ReturnPeriodSpec, state_duration_hours: float = 1.0) -> ExceedanceProbability:
    """Per-state exceedance probability ``duration / (years * 365.25 * 24 h)``."""
    if not state_duration_hours > 0:
        raise InvalidReturnPeriod("state duration must be positive")
    alpha = state_duration_hours / (spec.years * HOURS_PER_YEAR)
    if not 0.0 < alpha < 1.0:
        raise InvalidReturnPeriod(
            f"a {spec.years} year return period with {state_duration_hours} h states gives alpha={alpha}"
        )
    return ExceedanceProbability(alpha)


def find_threshold(grid: DensityGrid, alpha) -> tuple:
    """
    Density level whose superlevel set holds ``1 - alpha`` of the grid's mass.

    Cells are accumulated in order of decreasing density until the
    cumulative mass reaches ``(1 - alpha)`` times the total grid mass. All
    cells tied with the threshold density are included.

    Returns
    -------
    (f_m, enclosed_mass)
        ``enclosed_mass`` is the fraction of the grid mass in ``{f >= f_m}``.
    """
    a = float(alpha)
    f = grid.values.ravel()
    mass = f.sum()
    if mass <= 0:
        raise HdContourError("density grid has zero mass")
    desc = np.sort(f)[::-1]
    cum = np.cumsum(desc)
    target = (1.0 - a) * mass
    npos = int(np.count_nonzero(desc > 0))
    idx = int(np.searchsorted(cum, target, side="left"))
    if idx >= npos - 1:
        idx = npos - 1
        warnings.warn(
            f"alpha={a:g} needs every positive cell; returning the smallest positive density",
            CoverageWarning,
            stacklevel=2,
        )
    f_m = float(desc[idx])
    enclosed = float(f[f >= f_m].sum() / mass)
    return f_m, enclosed


# ---------------------------------------------------------------------------
# marching squares

# corner order per cell: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1)
# edge order: 0 bottom (0-1), 1 right (1-2), 2 top (3-2), 3 left (0-3)
_SEGMENTS = {
    0b0001: ((3, 0),), 0b0010: ((0, 1),), 0b0011: ((3, 1),), 0b0100: ((1, 2),),
    0b0110: ((0, 2),), 0b0111: ((3, 2),), 0b1000: ((2, 3),), 0b1001: ((2, 0),),
    0b1011: ((2, 1),), 0b1100: ((1, 3),), 0b1101: ((1, 0),), 0b1110: ((0, 3),),
}
# saddles: (segments if the cell center is inside, segments if outside)
_SADDLES = {
    0b0101: (((0, 1), (2, 3)), ((3, 0), (1, 2))),
    0b1010: (((3, 0), (1, 2)), ((0, 1), (2, 3))),
}


def _edge_key(i, j, e):
    # (0, i, j) joins (i, j)-(i+1, j); (1, i, j) joins (i, j)-(i, j+1)
    if e == 0:
        return (0, i, j)
    if e == 1:
        return (1, i + 1, j)
    if e == 2:
        return (0, i, j + 1)
    return (1, i, j)


def extract_isolines(grid: DensityGrid, f_m: float) -> list:
    """
    Closed polylines of the level set ``f = f_m`` (marching squares).

    Vertices are placed by linear interpolation along cell edges. Level sets
    cut by the grid boundary are closed along the boundary. Saddle cells are
    resolved with the mean of the four corner values.

    Returns
    -------
    list of (loop, touches_boundary)
        Each ``loop`` is an ``(m, 2)`` array with the first vertex repeated
        at the end. Loops are ordered by decreasing enclosed area.
    """
    f_m = float(f_m)
    if not f_m > 0:
        raise ValueError("isoline level must be positive")
    if f_m > grid.values.max():
        return []
    ax, ay = grid.hs_axis, grid.v_axis
    # a ring of zero padding closes every level set; pad vertices are clamped back onto the boundary
    p = np.pad(grid.values, 1, constant_values=0.0)
    xs = ax.origin + (np.arange(ax.count + 2) - 1) * ax.step
    ys = ay.origin + (np.arange(ay.count + 2) - 1) * ay.step
    inside = p >= f_m
    code = (
        inside[:-1, :-1].astype(np.uint8)
        | inside[1:, :-1] << 1
        | inside[1:, 1:] << 2
        | inside[:-1, 1:] << 3
    )
    ii, jj = np.nonzero((code != 0) & (code != 15))

    links = {}

    def link(a, b):
        links.setdefault(a, []).append(b)
        links.setdefault(b, []).append(a)

    for i, j in zip(ii.tolist(), jj.tolist()):
        c = int(code[i, j])
        if c in _SADDLES:
            centre = 0.25 * (p[i, j] + p[i + 1, j] + p[i + 1, j + 1] + p[i, j + 1])
            segs = _SADDLES[c][0 if centre >= f_m else 1]
        else:
            segs = _SEGMENTS[c]
        for e0, e1 in segs:
            link(_edge_key(i, j, e0), _edge_key(i, j, e1))

    lo_x, hi_x, lo_y, hi_y = ax.origin, ax.last, ay.origin, ay.last

    def point(key):
        kind, i, j = key
        i2, j2 = (i + 1, j) if kind == 0 else (i, j + 1)
        a, b = p[i, j], p[i2, j2]
        t = (f_m - a) / (b - a)
        x = xs[i] + t * (xs[i2] - xs[i])
        y = ys[j] + t * (ys[j2] - ys[j])
        cx = min(max(x, lo_x), hi_x)
        cy = min(max(y, lo_y), hi_y)
        return cx, cy, (cx != x or cy != y)

    loops = []
    seen = set()
    for start in sorted(links):
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            a, b = links[cur]
            step = b if a == prev else a
            if step == start or step in seen:
                break
            seen.add(step)
            chain.append(step)
            prev, cur = cur, step
        pts = [point(k) for k in chain]
        clamped = any(c for _, _, c in pts)
        xy = np.array([(x, y) for x, y, _ in pts])
        # clamping can collapse neighbours onto the same boundary point
        keep = np.ones(len(xy), dtype=bool)
        keep[1:] = np.any(xy[1:] != xy[:-1], axis=1)
        xy = xy[keep]
        if len(xy) > 1 and np.array_equal(xy[0], xy[-1]):
            xy = xy[:-1]
        if len(np.unique(xy, axis=0)) < 3:
            continue
        loops.append((np.vstack([xy, xy[:1]]), clamped))
    loops.sort(key=lambda lc: (-abs(polygon_area(lc[0])), lc[0][0, 0], lc[0][0, 1]))
    return loops


def polygon_area(loop) -> float:
    """Signed shoelace area of a closed loop."""
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]))


def point_in_loop(loop, x: float, y: float) -> bool:
    """Even-odd rule point-in-polygon test."""
    x0, y0 = loop[:-1, 0], loop[:-1, 1]
    x1, y1 = loop[1:, 0], loop[1:, 1]
    crosses = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return bool(np.count_nonzero(crosses & (x < xc)) % 2)


def isoline_tolerance(grid: DensityGrid, hs, v):
    """
    Bound on ``|f(point) - f_m|`` for points on an extracted isoline.

    Along a chord between two edge crossings the bilinear surface deviates
    from the (linear) edge interpolation by at most a quarter of the cell's
    twist ``|f00 - f10 - f01 + f11|``.
    """
    ax, ay = grid.hs_axis, grid.v_axis
    hs = np.asarray(hs, dtype=float)
    v = np.asarray(v, dtype=float)
    i = np.clip(np.floor((hs - ax.origin) / ax.step).astype(int), 0, ax.count - 2)
    j = np.clip(np.floor((v - ay.origin) / ay.step).astype(int), 0, ay.count - 2)
    f = grid.values
    twist = np.abs(f[i, j] - f[i + 1, j] - f[i, j + 1] + f[i + 1, j + 1])
    return 0.25 * twist + 1e-12 * f.max()


def compute_contour(grid: DensityGrid, spec: ReturnPeriodSpec, state_duration_hours: float = 1.0) -> HdcResult:
    """Threshold and isolines of the highest density contour for one return period."""
    alpha = alpha_from_return_period(spec, state_duration_hours)
    f_m, enclosed = find_threshold(grid, alpha)
    loops = extract_isolines(grid, f_m)
    contour = Contour(f_m, alpha, tuple(l for l, _ in loops), tuple(b for _, b in loops))
    if any(contour.boundary):
        log.info("contour for T=%g y touches the density grid boundary", spec.years)
    mass = total_mass(grid)
    return HdcResult(
        contour=contour,
        enclosed_mass=enclosed,
        threshold=f_m,
        alpha=alpha,
        return_period=spec,
        grid_mass=mass,
        cell_mass=f_m * grid.cell_area / mass,
    )


def exceedance_mask(dataset: Dataset, grid: DensityGrid, f_m: float) -> np.ndarray:
    """Boolean mask of samples outside the region ``{f >= f_m}``; off-grid samples count as outside."""
    on = grid.contains(dataset.hs, dataset.v)
    out = ~on
    if out.any():
        log.warning("%d samples lie outside the density grid and count as exceedances", int(out.sum()))
    dens = _bilinear(grid, dataset.hs[on], dataset.v[on])
    out[on] = dens < f_m
    return out


def count_exceedances(dataset: Dataset, grid: DensityGrid, f_m: float) -> int:
    """Number of samples whose interpolated density falls below ``f_m``."""
    return int(np.count_nonzero(exceedance_mask(dataset, grid, f_m)))


def binomial_band(n: int, alpha: float, level: float = 0.99) -> tuple:
    """Central ``level`` interval of Binomial(n, alpha) counts."""
    from scipy import stats

    lo = stats.binom.ppf((1 - level) / 2, n, alpha)
    hi = stats.binom.ppf(1 - (1 - level) / 2, n, alpha)
    return int(lo), int(hi)


def loop_mean_radius(loop, centre=(0.0, 0.0)) -> float:
    d = loop[:-1] - np.asarray(centre)
    return float(np.mean(np.hypot(d[:, 0], d[:, 1])))

