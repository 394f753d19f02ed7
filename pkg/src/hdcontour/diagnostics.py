"""Binomial plausibility check of contour exceedance counts."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from .core import Dataset, DensityGrid, InvalidParameter
from .hdc import HdcResult, count_exceedances

INDEPENDENCE_CAVEAT = (
    "Samples are treated as independent Bernoulli trials. Consecutive hourly "
    "sea states are serially correlated, so the binomial tail probability "
    "overstates the evidence against the density model."
)

_CHUNK = 4096


def _log_pmf(j, n, p):
    return gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0) + j * math.log(p) + (n - j) * math.log1p(-p)


def binomial_tail(n: int, p: float, k: int) -> float:
    """
    ``P(X > k)`` for ``X ~ Binomial(n, p)``.

    Terms of the upper tail are evaluated in log space with ``lgamma`` and
    summed from smallest to largest. Only the window of terms that are not
    negligible (more than ~800 e-folds below the largest) is visited, so the
    cost does not grow with ``n`` for small ``p``.
    """
    if int(n) != n or n < 0 or int(k) != k or not 0 <= k <= n:
        raise InvalidParameter(f"need integers 0 <= k <= n, got n={n!r}, k={k!r}")
    if not (math.isfinite(p) and 0.0 < p < 1.0):
        raise InvalidParameter(f"p must lie in (0, 1), got {p!r}")
    n, k = int(n), int(k)
    start = k + 1
    if start > n:
        return 0.0
    mode = min(n, int(math.floor((n + 1) * p)))
    if start <= mode:
        width = int(math.ceil(40.0 * math.sqrt(n * p * (1.0 - p)) + 50))
        j = np.arange(max(start, mode - width), min(n, mode + width) + 1, dtype=float)
        terms = np.exp(_log_pmf(j, n, p))
    else:
        # strictly decreasing terms: walk outward until they stop mattering
        parts = []
        total = 0.0
        lo = start
        while lo <= n:
            j = np.arange(lo, min(n, lo + _CHUNK - 1) + 1, dtype=float)
            t = np.exp(_log_pmf(j, n, p))
            parts.append(t)
            total += float(t.sum())
            lo += _CHUNK
            if t[-1] == 0.0 or t[-1] < 1e-20 * total:
                break
        terms = np.concatenate(parts)
    return min(1.0, math.fsum(np.sort(terms)))


def binomial_tail_direct(n: int, p: float, k: int) -> float:
    """Exact summation with integer binomial coefficients (small ``n`` only)."""
    return math.fsum(math.comb(n, j) * p ** j * (1.0 - p) ** (n - j) for j in range(k + 1, n + 1))


@dataclass(frozen=True)
class ExceedanceReport:
    n: int
    alpha: float
    observed_exceedances: int
    expected_exceedances: float
    tail_probability: float
    return_period_years: float = None
    caveat: str = INDEPENDENCE_CAVEAT

    def as_dict(self) -> dict:
        return asdict(self)


def exceedance_report(dataset: Dataset, result: HdcResult, grid: DensityGrid) -> ExceedanceReport:
    """
    Count samples outside the contour and rate the count under Binomial(n, alpha).

    ``tail_probability`` is the chance of seeing more exceedances than
    observed if the density were exact.
    """
    k = count_exceedances(dataset, grid, result.threshold)
    a = result.alpha.alpha
    n = dataset.n
    return ExceedanceReport(
        n=n,
        alpha=a,
        observed_exceedances=k,
        expected_exceedances=n * a,
        tail_probability=binomial_tail(n, a, k),
        return_period_years=result.return_period.years if result.return_period else None,
    )
