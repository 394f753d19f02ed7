"""
Conditional modeling approach (CMA) for the joint Hs-V density.

Hs follows a 3-parameter Weibull distribution; wind speed conditional on Hs
follows a 2-parameter Weibull whose scale and shape depend on Hs through
power laws ``c1 + c2 * h**c3``::

    f(h, v) = f_Hs(h) * f_V|Hs(v | h)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .core import DensityGrid, Dataset, GridAxis, HdContourError, InvalidParameter

DEFAULT_BIN_WIDTH = 0.5
DEFAULT_MIN_BIN_COUNT = 100
MAX_ITERATIONS = 10_000
MAX_GRID_CELLS = 20_000_000

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class FitFailure(HdContourError, RuntimeError):
    """Fitting did not produce usable parameters."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class EvaluationDomainError(HdContourError, ValueError):
    pass


@dataclass(frozen=True)
class Weibull3:
    """Weibull distribution ``F(x) = 1 - exp(-((x - location) / scale) ** shape)``."""

    scale: float
    shape: float
    location: float = 0.0

    def __post_init__(self):
        if not (self.scale > 0 and self.shape > 0 and self.location >= 0):
            raise InvalidParameter(f"invalid Weibull parameters {self}")
        if not all(math.isfinite(p) for p in (self.scale, self.shape, self.location)):
            raise InvalidParameter(f"invalid Weibull parameters {self}")

    def pdf(self, x):
        return weibull_pdf(x, self.scale, self.shape, self.location)

    def cdf(self, x):
        z = np.maximum(np.asarray(x, dtype=float) - self.location, 0.0) / self.scale
        return -np.expm1(-(z ** self.shape))

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        return self.location + self.scale * (-np.log1p(-q)) ** (1.0 / self.shape)

    def rvs(self, size, rng: np.random.Generator):
        return self.ppf(rng.random(size))

    def loglike(self, x) -> float:
        x = np.asarray(x, dtype=float)
        z = (x - self.location) / self.scale
        if np.any(z <= 0):
            return -math.inf
        k = self.shape
        return float(np.sum(math.log(k / self.scale) + (k - 1) * np.log(z) - z ** k))


def weibull_pdf(x, scale, shape, location=0.0):
    """Weibull density; zero at and below ``location``. Parameters broadcast."""
    x = np.asarray(x, dtype=float)
    z = (x - location) / scale
    pos = z > 0
    zp = np.where(pos, z, 1.0)
    # log form: zp**shape may overflow far in the tail, where the density is 0 anyway
    with np.errstate(over="ignore"):
        logf = np.log(shape / scale) + (shape - 1) * np.log(zp) - zp ** shape
    return np.where(pos, np.exp(logf), 0.0)


@dataclass(frozen=True)
class DependenceFn:
    """Power-law dependence ``h -> c1 + c2 * h**c3``."""

    c1: float
    c2: float
    c3: float

    def __call__(self, h):
        h = np.asarray(h, dtype=float)
        return self.c1 + self.c2 * np.power(h, self.c3)

    def as_tuple(self):
        return (self.c1, self.c2, self.c3)


@dataclass(frozen=True)
class CmaModel:
    hs_marginal: Weibull3
    v_scale: DependenceFn
    v_shape: DependenceFn
    fit_report: dict = field(default_factory=dict, compare=False)

    def conditional(self, h):
        """Scale and shape of V given Hs = h."""
        return self.v_scale(h), self.v_shape(h)

    def sample(self, n: int, rng: np.random.Generator) -> tuple:
        """Draw ``(hs, v)`` arrays of length ``n``."""
        hs = self.hs_marginal.rvs(n, rng)
        scale, shape = self.conditional(hs)
        if np.any(scale <= 0) or np.any(shape <= 0):
            raise EvaluationDomainError("dependence function nonpositive at a sampled Hs")
        v = scale * (-np.log1p(-rng.random(n))) ** (1.0 / shape)
        return hs, v

    def support_max(self, tail: float = 1e-12) -> tuple:
        """Upper ends of Hs and V beyond which the density is negligible."""
        h_max = float(self.hs_marginal.ppf(1.0 - tail))
        h = np.linspace(self.hs_marginal.location, h_max, 256)
        scale, shape = self.conditional(h)
        v_max = float(np.max(scale * (-math.log(tail)) ** (1.0 / shape)))
        return h_max, v_max

    def report(self) -> dict:
        m = self.hs_marginal
        out = {
            "method": "cma",
            "hs_marginal": {"scale": m.scale, "shape": m.shape, "location": m.location},
            "v_scale": dict(zip(("c1", "c2", "c3"), self.v_scale.as_tuple())),
            "v_shape": dict(zip(("d1", "d2", "d3"), self.v_shape.as_tuple())),
        }
        out.update(self.fit_report)
        return out


# ---------------------------------------------------------------------------
# Weibull maximum likelihood


def _shape_equation(k, y, logy, mean_logy):
    yk = y ** k
    return 1.0 / k + mean_logy - np.dot(yk, logy) / yk.sum()


def fit_weibull2(values, location: float = 0.0) -> tuple:
    """
    Maximum-likelihood scale and shape with a fixed location.

    Solves the profile score equation for the shape, then
    ``scale = mean(y**k) ** (1/k)``.
    """
    y = np.asarray(values, dtype=float) - location
    if np.any(y <= 0):
        raise FitFailure("values must exceed the location", location=location, minimum=float(y.min() + location))
    # work in units of the geometric mean to keep y**k well scaled
    g = math.exp(float(np.mean(np.log(y))))
    y = y / g
    logy = np.log(y)
    mean_logy = float(logy.mean())
    if np.ptp(logy) == 0:
        raise FitFailure("all values are equal", value=float(values[0]))
    lo, hi = 1e-3, 1.0
    while _shape_equation(hi, y, logy, mean_logy) > 0:
        hi *= 2.0
        if hi > 1e4:
            raise FitFailure("shape parameter diverged", upper=hi)
    k = optimize.brentq(_shape_equation, lo, hi, args=(y, logy, mean_logy), xtol=1e-14, rtol=1e-13,
                        maxiter=MAX_ITERATIONS)
    scale = float(np.mean(y ** k)) ** (1.0 / k) * g
    return scale, float(k)


def _profile_loglike(values, loc):
    scale, shape = fit_weibull2(values, loc)
    return Weibull3(scale, shape, loc).loglike(values), scale, shape


def fit_weibull3(values, max_iter: int = 200, tol: float = 1e-10) -> Weibull3:
    """
    Maximum-likelihood 3-parameter Weibull fit.

    The location is found by golden-section search of the profile
    log-likelihood on ``[0, min(values))``; scale and shape are the 2-parameter
    MLE at each candidate location.

    Raises
    ------
    FitFailure
        Fewer than 50 values, constant data, nonpositive minimum or no
        convergence within ``max_iter`` golden-section steps.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 50:
        raise FitFailure(f"need at least 50 values, got {x.size}", n=int(x.size))
    if not np.all(np.isfinite(x)):
        raise FitFailure("values contain NaN or infinity")
    if np.ptp(x) == 0:
        raise FitFailure("all values are equal", value=float(x[0]))
    xmin = float(x.min())
    if xmin <= 0:
        raise FitFailure("values must be positive", minimum=xmin)

    # stay a hair below the minimum: the profile likelihood is singular there for shape < 1
    a, b = 0.0, xmin * (1.0 - 1e-9)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _profile_loglike(x, c)[0]
    fd = _profile_loglike(x, d)[0]
    for it in range(max_iter):
        if b - a <= tol * max(xmin, 1.0):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _profile_loglike(x, c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _profile_loglike(x, d)[0]
    else:
        raise FitFailure("location search did not converge", iterations=max_iter, bracket=(a, b))

    # the interval ends are candidates too (profile may be monotone)
    candidates = [0.5 * (a + b), 0.0]
    best = max((_profile_loglike(x, loc) + (loc,) for loc in candidates), key=lambda r: r[0])
    ll, scale, shape, loc = best
    if not math.isfinite(ll):
        raise FitFailure("log-likelihood is not finite at the optimum", location=loc)
    return Weibull3(scale, shape, loc)


# ---------------------------------------------------------------------------
# conditional model


_DEPENDENCE_BOUNDS = ((-np.inf, -np.inf, 0.01), (np.inf, np.inf, 10.0))


def _fit_dependence(h, p, weights):
    """Weighted least squares fit of ``p ~ c1 + c2 * h**c3``."""
    order = np.argsort(h)
    h, p, weights = h[order], p[order], weights[order]
    c1 = float(p[0])
    # log-log regression of (p - c1) on h for the remaining bins
    dp = p[1:] - c1
    hh = h[1:]
    ok = (dp > 0) & (hh > 0)
    if ok.sum() >= 2:
        slope, intercept = np.polyfit(np.log(hh[ok]), np.log(dp[ok]), 1)
        c2, c3 = float(math.exp(intercept)), float(slope)
    else:
        c2, c3 = 0.0, 1.0
    if not (0.05 <= c3 <= 5):
        c3 = 1.0
    sigma = 1.0 / np.sqrt(weights)

    def model(x, a, b, c):
        return a + b * np.power(x, c)

    try:
        # the exponent is unidentifiable when p is flat in h; bounding it keeps the fit from wandering
        popt, _ = optimize.curve_fit(model, h, p, p0=(c1, c2, c3), sigma=sigma, bounds=_DEPENDENCE_BOUNDS,
                                     max_nfev=MAX_ITERATIONS)
    except (RuntimeError, optimize.OptimizeWarning) as exc:
        raise FitFailure(f"dependence fit did not converge: {exc}", h=h.tolist(), p=p.tolist()) from exc
    resid = p - model(h, *popt)
    return DependenceFn(*(float(c) for c in popt)), resid


def _conditional_nll(params, log_h, log_v):
    c1, c2, c3, d1, d2, d3 = params
    scale = c1 + c2 * np.exp(c3 * log_h)
    shape = d1 + d2 * np.exp(d3 * log_h)
    if np.any(scale <= 0) or np.any(shape <= 0):
        return np.inf
    z = log_v - np.log(scale)
    return -float(np.sum(np.log(shape) - np.log(scale) + (shape - 1) * z - np.exp(shape * z)))


def refine_dependence(hs, v, v_scale: DependenceFn, v_shape: DependenceFn) -> tuple:
    """
    Maximum-likelihood polish of the six dependence coefficients on the raw pairs.

    Starts from the binned least-squares estimates; the result is only
    accepted if it improves the conditional log-likelihood.
    """
    keep = (hs > 0) & (v > 0)
    log_h, log_v = np.log(hs[keep]), np.log(v[keep])
    p0 = np.array(v_scale.as_tuple() + v_shape.as_tuple())
    f0 = _conditional_nll(p0, log_h, log_v)
    res = optimize.minimize(_conditional_nll, p0, args=(log_h, log_v), method="Nelder-Mead",
                            options={"maxiter": MAX_ITERATIONS, "maxfev": MAX_ITERATIONS,
                                     "xatol": 1e-8, "fatol": 1e-8})
    res = optimize.minimize(_conditional_nll, res.x, args=(log_h, log_v), method="BFGS")
    if not (np.isfinite(res.fun) and res.fun <= f0):
        return v_scale, v_shape, f0
    p = [float(c) for c in res.x]
    return DependenceFn(*p[:3]), DependenceFn(*p[3:]), float(res.fun)


def fit_conditional(dataset: Dataset, bin_width: float = DEFAULT_BIN_WIDTH,
                    min_bin_count: int = DEFAULT_MIN_BIN_COUNT, refine: bool = False) -> CmaModel:
    """
    Fit the Hs-first conditional model.

    1. 3-parameter Weibull for all Hs values.
    2. Hs bins of ``bin_width`` starting at 0; bins holding at least
       ``min_bin_count`` samples qualify.
    3. 2-parameter Weibull (location 0) to the wind speeds of each
       qualifying bin.
    4. Count-weighted least squares of the per-bin scale and shape against
       the mean Hs of the bin.
    5. Optionally (``refine=True``) a joint maximum-likelihood polish of the
       dependence coefficients on the raw (Hs, V) pairs.

    Raises
    ------
    FitFailure
        Fewer than 3 qualifying bins, or any underlying fit failing.
    """
    if not (bin_width > 0):
        raise InvalidParameter("bin_width must be > 0")
    hs, v = dataset.hs, dataset.v
    edges_idx = np.floor(hs / bin_width).astype(int)
    bins = np.unique(edges_idx)
    counts = np.array([(edges_idx == b).sum() for b in bins])
    qualifying = bins[counts >= min_bin_count]
    if qualifying.size < 3:
        raise FitFailure(
            f"only {qualifying.size} Hs bins hold >= {min_bin_count} samples, need 3",
            counts=dict(zip(bins.tolist(), counts.tolist())),
        )
    marginal = fit_weibull3(hs)

    rows = []
    for b in qualifying:
        sel = edges_idx == b
        vb = v[sel]
        if np.any(vb <= 0):
            vb = vb[vb > 0]
        scale, shape = fit_weibull2(vb)
        rows.append((b * bin_width, (b + 1) * bin_width, int(sel.sum()), float(hs[sel].mean()), scale, shape))
    table = np.array(rows)
    h_mean, weights = table[:, 3], table[:, 2]
    v_scale, r_scale = _fit_dependence(h_mean, table[:, 4], weights)
    v_shape, r_shape = _fit_dependence(h_mean, table[:, 5], weights)

    binned = {"v_scale": list(v_scale.as_tuple()), "v_shape": list(v_shape.as_tuple())}
    if refine:
        v_scale, v_shape, _ = refine_dependence(hs, v, v_scale, v_shape)

    h_max = float(hs.max())
    probe = np.linspace(marginal.location, h_max, 512)
    if np.any(v_scale(probe) <= 0) or np.any(v_shape(probe) <= 0):
        raise FitFailure("fitted dependence function is nonpositive on the observed Hs range",
                         v_scale=v_scale.as_tuple(), v_shape=v_shape.as_tuple())

    report = {
        "bin_width": bin_width,
        "min_bin_count": min_bin_count,
        "refined": bool(refine),
        "binned_least_squares": binned,
        "bins": [
            {
                "hs_low": r[0], "hs_high": r[1], "count": int(r[2]), "hs_mean": r[3],
                "v_scale": r[4], "v_shape": r[5], "scale_residual": float(rs), "shape_residual": float(rk),
            }
            for r, rs, rk in zip(rows, r_scale, r_shape)
        ],
    }
    return CmaModel(marginal, v_scale, v_shape, report)


def evaluate_cma(model: CmaModel, hs_axis: GridAxis, v_axis: GridAxis) -> DensityGrid:
    """Joint density ``f_Hs(h) * f_V|Hs(v | h)`` at every cell center."""
    h = hs_axis.coords
    v = v_axis.coords
    scale, shape = model.conditional(np.maximum(h, 0.0))
    if np.any(scale <= 0) or np.any(shape <= 0) or not np.all(np.isfinite(scale * shape)):
        bad = h[(scale <= 0) | (shape <= 0)]
        raise EvaluationDomainError(
            f"dependence function nonpositive on the grid's Hs range (e.g. at Hs={bad[:1]})"
        )
    marg = model.hs_marginal.pdf(h)
    cond = weibull_pdf(v[None, :], scale[:, None], shape[:, None])
    return DensityGrid(hs_axis, v_axis, marg[:, None] * cond)


def default_axes_cma(model: CmaModel, step=0.1, tail: float = 1e-12) -> tuple:
    """Axes from zero to where the fitted marginal and conditional tails fall below ``tail``."""
    step_hs, step_v = (step, step) if np.ndim(step) == 0 else step
    h_max, v_max = model.support_max(tail)
    cells = (h_max / step_hs + 1) * (v_max / step_v + 1)
    if not cells <= MAX_GRID_CELLS:
        raise FitFailure(
            f"fitted model implies a {h_max:.4g} x {v_max:.4g} grid ({cells:.3g} cells); "
            "the dependence functions probably extrapolate badly",
            h_max=h_max, v_max=v_max, v_scale=model.v_scale.as_tuple(), v_shape=model.v_shape.as_tuple(),
        )
    hs_axis = GridAxis.spanning(0.0, round(math.ceil(round(h_max / step_hs, 9)) * step_hs, 12), step_hs)
    v_axis = GridAxis.spanning(0.0, round(math.ceil(round(v_max / step_v, 9)) * step_v, 12), step_v)
    return hs_axis, v_axis


def fit_grid(dataset: Dataset, bin_width: float = DEFAULT_BIN_WIDTH,
             min_bin_count: int = DEFAULT_MIN_BIN_COUNT, step=0.1):
    """Convenience: fit and evaluate on default axes that also cover the data."""
    model = fit_conditional(dataset, bin_width, min_bin_count)
    hs_axis, v_axis = default_axes_cma(model, step)
    step_hs, step_v = (step, step) if np.ndim(step) == 0 else step
    hi_h = max(hs_axis.last, round(math.ceil(round(float(dataset.hs.max()) / step_hs, 9)) * step_hs, 12))
    hi_v = max(v_axis.last, round(math.ceil(round(float(dataset.v.max()) / step_v, 9)) * step_v, 12))
    hs_axis = GridAxis.spanning(0.0, hi_h, step_hs)
    v_axis = GridAxis.spanning(0.0, hi_v, step_v)
    return model, evaluate_cma(model, hs_axis, v_axis)
