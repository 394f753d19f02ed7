"""
Extreme environmental design conditions along a contour.

Rays are cast from the data median in a normalized polar frame; each ray's
farthest crossing with the contour is one design condition. The points of
maximum Hs and maximum V along the contour complete the set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Contour, Dataset, DesignCondition, HdContourError
from .hdc import point_in_loop

DEFAULT_ANGLES = (0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0)


class FrameError(HdContourError, ValueError):
    pass


class GeometryError(HdContourError, ValueError):
    pass


@dataclass(frozen=True)
class PolarFrame:
    origin_hs: float
    origin_v: float
    scale_hs: float
    scale_v: float

    def __post_init__(self):
        if not (self.scale_hs > 0 and self.scale_v > 0):
            raise FrameError(f"frame scales must be positive, got ({self.scale_hs}, {self.scale_v})")

    @property
    def origin(self):
        return (self.origin_hs, self.origin_v)

    def normalize(self, xy):
        xy = np.asarray(xy, dtype=float)
        return np.column_stack(((xy[:, 0] - self.origin_hs) / self.scale_hs, (xy[:, 1] - self.origin_v) / self.scale_v))


def build_frame(dataset: Dataset, contour: Contour, normalization: str = "extent") -> PolarFrame:
    """
    Polar frame centred on the coordinate-wise data median.

    ``normalization="extent"`` scales each axis by the distance from the
    origin to the contour's maximum on that axis; ``"std"`` uses the sample
    standard deviations instead.
    """
    if contour.is_empty:
        raise FrameError("contour has no loops")
    ohs, ov = dataset.median()
    if not any(point_in_loop(loop, ohs, ov) for loop in contour.loops):
        raise FrameError(f"data median ({ohs}, {ov}) is not inside the contour")
    if normalization == "extent":
        pts = contour.vertices()
        scale_hs = float(pts[:, 0].max()) - ohs
        scale_v = float(pts[:, 1].max()) - ov
    elif normalization == "std":
        scale_hs = float(np.std(dataset.hs, ddof=1))
        scale_v = float(np.std(dataset.v, ddof=1))
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return PolarFrame(ohs, ov, scale_hs, scale_v)


def _direction(phi):
    # exact unit vectors on the axes so the 0 and 90 degree rays keep one coordinate fixed
    exact = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0)}
    if float(phi) in exact:
        return exact[float(phi)]
    r = math.radians(phi)
    return math.cos(r), math.sin(r)


def angle_label(phi) -> str:
    return f"angle({float(phi):g})"


def ray_intersection(frame: PolarFrame, contour: Contour, phi_star: float) -> DesignCondition:
    """Farthest crossing of the ray at normalized angle ``phi_star`` (degrees) with the contour."""
    if not 0.0 <= phi_star <= 90.0:
        raise ValueError(f"phi_star must lie in [0, 90], got {phi_star}")
    if contour.is_empty:
        raise GeometryError("contour has no loops")
    dx, dy = _direction(phi_star)
    best = -1.0
    for loop in contour.loops:
        q = frame.normalize(loop)
        p0, p1 = q[:-1], q[1:]
        ex, ey = p1[:, 0] - p0[:, 0], p1[:, 1] - p0[:, 1]
        denom = dx * ey - dy * ex
        ok = denom != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (p0[:, 0] * ey - p0[:, 1] * ex) / denom
            s = (p0[:, 0] * dy - p0[:, 1] * dx) / denom
        hit = ok & (t > 0) & (s >= 0) & (s <= 1)
        if hit.any():
            best = max(best, float(t[hit].max()))
    if best <= 0:
        raise GeometryError(f"ray at {phi_star} degrees does not cross the contour")
    hs = frame.origin_hs + best * dx * frame.scale_hs
    v = frame.origin_v + best * dy * frame.scale_v
    return DesignCondition(angle_label(phi_star), hs, v)


def max_along_contour(contour: Contour, axis: str) -> DesignCondition:
    """
    Contour point with the largest ``axis`` coordinate ("hs" or "v").

    When several vertices share the maximum (a flat extremal edge) the
    partner coordinate is the midpoint of their range.
    """
    if axis not in ("hs", "v"):
        raise ValueError(f"axis must be 'hs' or 'v', got {axis!r}")
    if contour.is_empty:
        raise GeometryError("contour has no loops")
    pts = contour.vertices()
    a, b = (0, 1) if axis == "hs" else (1, 0)
    m = float(pts[:, a].max())
    tied = pts[pts[:, a] >= m - 1e-12 * max(1.0, abs(m)), b]
    partner = 0.5 * (float(tied.min()) + float(tied.max()))
    if axis == "hs":
        return DesignCondition("max_hs", m, partner)
    return DesignCondition("max_v", partner, m)


def design_conditions(contour: Contour, dataset: Dataset, angles=DEFAULT_ANGLES,
                      frame: PolarFrame = None, normalization: str = "extent") -> list:
    """
    Ray conditions at each angle followed by ``max_hs`` and ``max_v``.

    With the default seven angles this is the nine-row table. Pass ``frame``
    to share one polar frame across several contours.
    """
    if frame is None:
        frame = build_frame(dataset, contour, normalization)
    out = [ray_intersection(frame, contour, phi) for phi in angles]
    out.append(max_along_contour(contour, "hs"))
    out.append(max_along_contour(contour, "v"))
    return out
