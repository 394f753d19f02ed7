import math

import numpy as np
import pytest

import hdcontour
from hdcontour import hdc, pipeline
from hdcontour.core import DensityGrid, GridAxis
from hdcontour.synth import generate_synthetic

# every HdcResult produced anywhere in the session, audited by the acceptance suite
CONTOUR_LOG = []
ACCEPTANCE_RESULTS = {}


def _recording(fn):
    def wrapper(*args, **kwargs):
        result = fn(*args, **kwargs)
        CONTOUR_LOG.append(result)
        return result

    wrapper.__wrapped__ = fn
    return wrapper


# patched at import time: conftest loads before the test modules bind the name
hdc.compute_contour = _recording(hdc.compute_contour)
pipeline.compute_contour = hdc.compute_contour
hdcontour.compute_contour = hdc.compute_contour


def pytest_collection_modifyitems(session, config, items):
    # the acceptance module audits contours computed by the rest of the suite, so it goes last
    items.sort(key=lambda item: item.module.__name__.endswith("test_acceptance"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k)):
        status, text = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{status}] criterion {key}: {text}")


def gaussian_grid(step=0.05, half_width=5.0, centre=(0.0, 0.0)):
    ax = GridAxis.spanning(centre[0] - half_width, centre[0] + half_width, step)
    ay = GridAxis.spanning(centre[1] - half_width, centre[1] + half_width, step)
    x = ax.coords - centre[0]
    y = ay.coords - centre[1]
    f = np.exp(-0.5 * (x[:, None] ** 2 + y[None, :] ** 2)) / (2 * math.pi)
    return DensityGrid(ax, ay, f)


@pytest.fixture(scope="session")
def std_normal_grid():
    return gaussian_grid()


@pytest.fixture(scope="session")
def synthetic_20k():
    return generate_synthetic(20_000, 7)


@pytest.fixture(scope="session")
def synthetic_100k():
    return generate_synthetic(100_000, 11)
