"""Highest-density environmental contours of significant wave height and wind speed."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Contour,
    Dataset,
    DensityGrid,
    DesignCondition,
    ExceedanceProbability,
    GridAxis,
    HdContourError,
    ReturnPeriodSpec,
    Sample,
    interpolate,
    total_mass,
)
from .hdc import alpha_from_return_period, compute_contour, count_exceedances, find_threshold  # noqa: E402
from .design import design_conditions  # noqa: E402
from .diagnostics import binomial_tail, exceedance_report  # noqa: E402
