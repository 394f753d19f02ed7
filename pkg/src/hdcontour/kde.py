"""
Constant-bandwidth bivariate Gaussian kernel density estimation.

Each variable gets its own bandwidth ``b = factor * sigma * n**exponent``,
by default twice Silverman's two-dimensional rule of thumb
(``factor=2``, ``exponent=-1/6``). The product kernel is separable, which
``evaluate`` exploits: one 1-D kernel matrix per axis, combined by a matrix
product over the samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DensityGrid, Dataset, GridAxis, HdContourError, InvalidParameter

DEFAULT_FACTOR = 2.0
DEFAULT_EXPONENT = -1.0 / 6.0
DEFAULT_STEP = 0.1
DEFAULT_PADDING = 4.0

_SQRT_2PI = math.sqrt(2.0 * math.pi)
# samples per block in the kernel-matrix product, bounds memory to ~ block * (nx + ny) floats
_BLOCK = 16384


class DegenerateData(HdContourError, ValueError):
    pass


class GridTooSmall(HdContourError, UserWarning):
    """Grid does not cover the data plus the required kernel padding."""


@dataclass(frozen=True)
class KdeModel:
    b_hs: float
    b_v: float
    dataset: Dataset
    sigma_hs: float
    sigma_v: float

    def __post_init__(self):
        if not (self.b_hs > 0 and self.b_v > 0):
            raise InvalidParameter("bandwidths must be positive")

    def report(self) -> dict:
        return {
            "method": "kde",
            "n": self.dataset.n,
            "sigma_hs": self.sigma_hs,
            "sigma_v": self.sigma_v,
            "b_hs": self.b_hs,
            "b_v": self.b_v,
        }


def silverman_bandwidth(sigma: float, n: int, factor: float = DEFAULT_FACTOR,
                        exponent: float = DEFAULT_EXPONENT) -> float:
    """
    Rule-of-thumb bandwidth ``factor * sigma * n**exponent``.

    With the defaults this is ``2 * sigma * n**(-1/6)``.
    """
    if not (math.isfinite(sigma) and sigma > 0):
        raise InvalidParameter(f"sigma must be > 0, got {sigma!r}")
    if int(n) != n or n < 1:
        raise InvalidParameter(f"n must be a positive integer, got {n!r}")
    if not (math.isfinite(factor) and factor > 0):
        raise InvalidParameter(f"bandwidth factor must be > 0, got {factor!r}")
    return factor * sigma * float(n) ** exponent


def fit(dataset: Dataset, factor: float = DEFAULT_FACTOR, exponent: float = DEFAULT_EXPONENT) -> KdeModel:
    """Bandwidths from the sample standard deviations (n - 1 denominator)."""
    n = dataset.n
    sigma_hs = float(np.std(dataset.hs, ddof=1))
    sigma_v = float(np.std(dataset.v, ddof=1))
    for name, s in (("hs", sigma_hs), ("v", sigma_v)):
        if not s > 0:
            raise DegenerateData(f"{name} has zero variance; a bandwidth cannot be derived")
    return KdeModel(
        b_hs=silverman_bandwidth(sigma_hs, n, factor, exponent),
        b_v=silverman_bandwidth(sigma_v, n, factor, exponent),
        dataset=dataset,
        sigma_hs=sigma_hs,
        sigma_v=sigma_v,
    )


def _floor_to(x, step):
    # guard against 2.9999999999 style representation error before flooring
    return math.floor(round(x / step, 9)) * step


def _ceil_to(x, step):
    return math.ceil(round(x / step, 9)) * step


def default_axes(dataset: Dataset, model: KdeModel, step=DEFAULT_STEP,
                 padding: float = DEFAULT_PADDING) -> tuple:
    """
    Axes reaching ``padding`` bandwidths past the data, clamped at zero.

    ``step`` is a scalar or an ``(hs_step, v_step)`` pair. End points are
    snapped outward to multiples of the step.
    """
    step_hs, step_v = (step, step) if np.ndim(step) == 0 else step
    axes = []
    for data, b, s in ((dataset.hs, model.b_hs, step_hs), (dataset.v, model.b_v, step_v)):
        lo = max(0.0, _floor_to(float(data.min()) - padding * b, s))
        hi = _ceil_to(float(data.max()) + padding * b, s)
        # snap to a clean decimal so the axis prints nicely and is platform independent
        axes.append(GridAxis.spanning(round(lo, 12), round(hi, 12), s))
    return tuple(axes)


def _kernel_matrix(coords: np.ndarray, data: np.ndarray, b: float, truncate) -> np.ndarray:
    z = (coords[None, :] - data[:, None]) / b
    k = np.exp(-0.5 * z * z) / (_SQRT_2PI * b)
    if truncate is not None:
        k[np.abs(z) > truncate] = 0.0
    return k


def check_coverage(dataset: Dataset, model: KdeModel, hs_axis: GridAxis, v_axis: GridAxis,
                   padding: float = DEFAULT_PADDING, strict: bool = False) -> bool:
    """
    Whether the axes cover the data extended by ``padding`` bandwidths.

    The lower end is only required down to zero, both variables being
    nonnegative. Issues a :class:`GridTooSmall` warning (or raises it when
    ``strict``) if not.
    """
    problems = []
    for name, data, b, ax in (("hs", dataset.hs, model.b_hs, hs_axis), ("v", dataset.v, model.b_v, v_axis)):
        need_lo = max(0.0, float(data.min()) - padding * b)
        need_hi = float(data.max()) + padding * b
        slack = 1e-9 * ax.step
        if ax.origin > need_lo + slack or ax.last < need_hi - slack:
            problems.append(
                f"{name} axis [{ax.origin}, {ax.last}] does not cover [{need_lo:.6g}, {need_hi:.6g}]"
            )
    if problems:
        msg = "; ".join(problems)
        if strict:
            raise GridTooSmall(msg)
        warnings.warn(msg, GridTooSmall, stacklevel=3)
        return False
    return True


def evaluate(model: KdeModel, hs_axis: GridAxis, v_axis: GridAxis, truncate=None,
             strict: bool = False, padding: float = DEFAULT_PADDING) -> DensityGrid:
    """
    Evaluate the KDE at every cell center.

    Parameters
    ----------
    model : KdeModel
    hs_axis, v_axis : GridAxis
    truncate : float, optional
        Drop kernel contributions beyond this many bandwidths per axis.
        Exact evaluation when None (default). At 6 bandwidths the relative
        error is below 1e-8.
    strict : bool
        Raise :class:`GridTooSmall` instead of warning when the axes do not
        cover the data plus ``padding`` bandwidths.

    Returns
    -------
    DensityGrid
    """
    ds = model.dataset
    check_coverage(ds, model, hs_axis, v_axis, padding=padding, strict=strict)
    x = hs_axis.coords
    y = v_axis.coords
    acc = np.zeros((x.size, y.size))
    # fixed block order keeps the accumulation order, and so the result, reproducible
    for start in range(0, ds.n, _BLOCK):
        kx = _kernel_matrix(x, ds.hs[start:start + _BLOCK], model.b_hs, truncate)
        ky = _kernel_matrix(y, ds.v[start:start + _BLOCK], model.b_v, truncate)
        acc += kx.T @ ky
    return DensityGrid(hs_axis, v_axis, acc / ds.n)


def fit_grid(dataset: Dataset, factor: float = DEFAULT_FACTOR, exponent: float = DEFAULT_EXPONENT,
             step=DEFAULT_STEP, padding: float = DEFAULT_PADDING, strict: bool = False):
    """Convenience: fit, build default axes and evaluate. Returns ``(model, grid)``."""
    model = fit(dataset, factor, exponent)
    hs_axis, v_axis = default_axes(dataset, model, step, padding)
    return model, evaluate(model, hs_axis, v_axis, strict=strict, padding=padding)
