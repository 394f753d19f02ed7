"""
Synthetic hindcast-like data for desk-scale runs and tests.

The default generator is a conditional model with fixed coefficients of
roughly Southern-North-Sea character (median Hs about 1.6 m, median wind
speed about 8 m/s)::

    Hs      ~ Weibull(scale=1.8, shape=1.4, location=0.2)
    V | Hs  ~ Weibull(scale=2.5 + 3.5 * Hs, shape=2.0 + 0.5 * Hs**1.5)
"""

from __future__ import annotations

from datetime import datetime, timedelta

import numpy as np

from .cma import CmaModel, DependenceFn, Weibull3
from .core import Dataset

DEFAULT_GENERATOR = CmaModel(
    hs_marginal=Weibull3(scale=1.8, shape=1.4, location=0.2),
    v_scale=DependenceFn(2.5, 3.5, 1.0),
    v_shape=DependenceFn(2.0, 0.5, 1.5),
)

START = datetime(1958, 1, 1)


def generate_synthetic(n: int, seed: int, model: CmaModel = DEFAULT_GENERATOR,
                       state_duration_hours: float = 1.0, with_times: bool = True) -> Dataset:
    """Draw ``n`` samples from ``model``; identical for identical ``seed``."""
    rng = np.random.default_rng(seed)
    hs, v = model.sample(int(n), rng)
    times = None
    if with_times:
        dt = timedelta(hours=state_duration_hours)
        times = [START + i * dt for i in range(int(n))]
    return Dataset(hs, v, state_duration_hours, times)
