import math
import warnings

import mpmath
import numpy as np
import pytest

from hdcontour import kde
from hdcontour.core import Dataset, GridAxis, InvalidParameter, total_mass


def brute_force_kde(ds, b_hs, b_v, x, y):
    """Direct double loop over grid cells; each cell sums over samples."""
    out = np.empty((x.size, y.size))
    norm = 1.0 / (2 * math.pi * b_hs * b_v * ds.n)
    for i, xi in enumerate(x):
        for j, yj in enumerate(y):
            zx = (xi - ds.hs) / b_hs
            zy = (yj - ds.v) / b_v
            out[i, j] = norm * np.sum(np.exp(-0.5 * (zx * zx + zy * zy)))
    return out


def test_bandwidth_trivial_cases():
    assert kde.silverman_bandwidth(1.0, 1) == 2.0
    assert kde.silverman_bandwidth(2.0, 64) == pytest.approx(2.0, rel=1e-15)


def test_bandwidth_large_n_against_mpmath():
    mpmath.mp.dps = 40
    oracle = float(2 * mpmath.power(mpmath.mpf(429528), mpmath.mpf(-1) / 6))
    assert kde.silverman_bandwidth(1.0, 429528) == pytest.approx(oracle, rel=1e-13)
    assert oracle == pytest.approx(0.2302492, abs=1e-7)


@pytest.mark.parametrize("sigma,n", [(0.0, 10), (-1.0, 10), (1.0, 0), (1.0, 2.5), (math.nan, 10)])
def test_bandwidth_invalid(sigma, n):
    with pytest.raises(InvalidParameter):
        kde.silverman_bandwidth(sigma, n)


def test_bandwidth_configurable_factor_and_exponent():
    assert kde.silverman_bandwidth(1.0, 64, factor=1.0, exponent=-0.5) == pytest.approx(0.125)


def test_fit_two_points():
    m = kde.fit(Dataset([0.0, 2.0], [0.0, 2.0]))
    expected = 2 * math.sqrt(2) * 2 ** (-1 / 6)
    assert m.sigma_hs == pytest.approx(math.sqrt(2), rel=1e-15)
    assert m.b_hs == pytest.approx(expected, rel=1e-14)
    assert m.b_v == pytest.approx(expected, rel=1e-14)


def test_fit_degenerate():
    with pytest.raises(kde.DegenerateData):
        kde.fit(Dataset([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))


def test_fit_monte_carlo_normals():
    rng = np.random.default_rng(42)
    z = rng.standard_normal((2, 10_000))
    # shift keeps the values nonnegative; standard deviations are unaffected
    m = kde.fit(Dataset(z[0] + 10, z[1] + 10))
    nominal = 2 * 10_000 ** (-1 / 6)
    assert nominal == pytest.approx(0.4309, abs=1e-4)
    # sigma-hat of 1e4 normals is within ~3% at 4 standard errors
    assert m.b_hs == pytest.approx(nominal, rel=0.03)
    assert m.b_v == pytest.approx(nominal, rel=0.03)
    assert m.b_hs == pytest.approx(2 * np.std(z[0], ddof=1) * 10_000 ** (-1 / 6), rel=1e-12)


def test_evaluate_single_sample_peak():
    ds = Dataset([2.0, 2.0 + 1e-300], [5.0, 5.0])
    model = kde.KdeModel(0.3, 0.7, ds, 1.0, 1.0)
    ax = GridAxis.spanning(0.0, 4.0, 0.1)
    ay = GridAxis.spanning(2.0, 8.0, 0.1)
    grid = kde.evaluate(model, ax, ay)
    i, j = 20, 30
    assert ax.coords[i] == pytest.approx(2.0) and ay.coords[j] == pytest.approx(5.0)
    assert grid.values[i, j] == pytest.approx(1 / (2 * math.pi * 0.3 * 0.7), rel=1e-12)
    assert grid.values.max() == grid.values[i, j]


@pytest.mark.filterwarnings("ignore::hdcontour.kde.GridTooSmall")
def test_evaluate_mirror_symmetry():
    ds = Dataset([1.0, 3.0], [4.0, 6.0])
    model = kde.KdeModel(0.5, 0.5, ds, 1.0, 1.0)
    ax = GridAxis.spanning(0.0, 4.0, 0.1)
    ay = GridAxis.spanning(3.0, 7.0, 0.1)
    g = kde.evaluate(model, ax, ay).values
    # mirror through the grid centre (2, 5)
    assert np.allclose(g, g[::-1, ::-1], rtol=1e-12, atol=0)


def test_evaluate_matches_brute_force():
    rng = np.random.default_rng(3)
    ds = Dataset(rng.gamma(2.0, 1.0, 100), rng.gamma(4.0, 2.0, 100))
    model = kde.fit(ds)
    ax = GridAxis(0.0, 0.3, 50)
    ay = GridAxis(0.0, 0.6, 50)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", kde.GridTooSmall)
        fast = kde.evaluate(model, ax, ay).values
    ref = brute_force_kde(ds, model.b_hs, model.b_v, ax.coords, ay.coords)
    assert np.allclose(fast, ref, rtol=1e-12, atol=0)


def test_truncation_error_small():
    rng = np.random.default_rng(4)
    ds = Dataset(rng.gamma(2.0, 1.0, 300), rng.gamma(4.0, 2.0, 300))
    model, exact = kde.fit_grid(ds)
    trunc = kde.evaluate(model, exact.hs_axis, exact.v_axis, truncate=6.0)
    rel = np.abs(trunc.values - exact.values).max() / exact.values.max()
    assert rel < 1e-8


def test_default_axes_rule():
    ds = Dataset([1.0, 2.0, 1.5], [1.0, 2.0, 1.5])
    model = kde.KdeModel(0.25, 0.25, ds, 0.5, 0.5)
    ax, ay = kde.default_axes(ds, model)
    assert (ax.origin, ax.last, ax.step) == (0.0, pytest.approx(3.0), 0.1)
    assert ax.count == 31


def test_default_axes_clamped_at_zero():
    ds = Dataset([0.0, 1.0], [0.0, 5.0])
    model = kde.fit(ds)
    ax, ay = kde.default_axes(ds, model)
    assert ax.origin == 0.0 and ay.origin == 0.0


def test_default_axes_reach_past_data():
    rng = np.random.default_rng(5)
    hs = np.append(rng.uniform(0.2, 6.0, 500), 12.0)
    ds = Dataset(hs, rng.uniform(1.0, 25.0, 501))
    model = kde.fit(ds)
    ax, ay = kde.default_axes(ds, model)
    assert ax.last >= 12.0 + 4 * model.b_hs - 1e-9
    assert ay.last >= ds.v.max() + 4 * model.b_v - 1e-9
    # snapped onto the 0.1 lattice
    assert ax.last * 10 == pytest.approx(round(ax.last * 10), abs=1e-9)


def test_grid_too_small_warns_or_raises():
    ds = Dataset([1.0, 2.0, 3.0], [4.0, 5.0, 7.0])
    model = kde.fit(ds)
    ax, ay = GridAxis(0.0, 0.1, 20), GridAxis(0.0, 0.1, 20)
    with pytest.warns(kde.GridTooSmall):
        kde.evaluate(model, ax, ay)
    with pytest.raises(kde.GridTooSmall):
        kde.evaluate(model, ax, ay, strict=True)


@pytest.mark.parametrize("padding,tol", [(4.0, 1e-2), (6.0, 1e-3)])
def test_mass_near_one(padding, tol):
    rng = np.random.default_rng(6)
    # offset from zero so the clamp at Hs = 0, V = 0 cuts no kernel mass
    ds = Dataset(rng.gamma(3.0, 0.6, 2000) + 5.0, rng.gamma(5.0, 1.6, 2000) + 10.0)
    _, grid = kde.fit_grid(ds, padding=padding)
    assert abs(total_mass(grid) - 1.0) <= tol


def test_clamp_at_zero_loses_mass_without_renormalizing():
    rng = np.random.default_rng(6)
    ds = Dataset(rng.gamma(3.0, 0.6, 2000) + 0.05, rng.gamma(5.0, 1.6, 2000) + 10.0)
    model, grid = kde.fit_grid(ds, padding=6.0)
    from scipy.special import ndtr

    # kernel mass below the lower edge of the first cell is simply lost
    edge = grid.hs_axis.origin - grid.hs_axis.step / 2
    leak = np.mean(ndtr((edge - ds.hs) / model.b_hs))
    assert leak > 0.02
    assert total_mass(grid) == pytest.approx(1.0 - leak, abs=1e-3)


def test_duplicate_never_decreases_density_at_sample():
    rng = np.random.default_rng(8)
    hs, v = rng.gamma(2.0, 1.0, 60), rng.gamma(4.0, 2.0, 60)
    ds = Dataset(hs, v)
    model = kde.fit(ds)
    ax, ay = kde.default_axes(ds, model)
    k = int(np.argmax(hs))
    ds2 = Dataset(np.append(hs, hs[k]), np.append(v, v[k]))
    m2 = kde.KdeModel(model.b_hs, model.b_v, ds2, model.sigma_hs, model.sigma_v)
    g1 = kde.evaluate(model, ax, ay)
    g2 = kde.evaluate(m2, ax, ay)
    from hdcontour.core import interpolate

    assert interpolate(g2, hs[k], v[k]) >= interpolate(g1, hs[k], v[k])


def test_translation_equivariance():
    rng = np.random.default_rng(9)
    hs, v = rng.gamma(2.0, 1.0, 80) + 1, rng.gamma(4.0, 2.0, 80) + 1
    ds = Dataset(hs, v)
    model = kde.fit(ds)
    ax, ay = GridAxis(0.0, 0.25, 40), GridAxis(0.0, 0.5, 50)
    dh, dv = 1.5, 3.0
    shifted = Dataset(hs + dh, v + dv)
    m2 = kde.KdeModel(model.b_hs, model.b_v, shifted, model.sigma_hs, model.sigma_v)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", kde.GridTooSmall)
        a = kde.evaluate(model, ax, ay).values
        b = kde.evaluate(m2, GridAxis(dh, 0.25, 40), GridAxis(dv, 0.5, 50)).values
    assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_evaluate_deterministic():
    rng = np.random.default_rng(10)
    ds = Dataset(rng.gamma(2.0, 1.0, 40_000), rng.gamma(4.0, 2.0, 40_000))
    _, g1 = kde.fit_grid(ds)
    _, g2 = kde.fit_grid(ds)
    assert np.array_equal(g1.values, g2.values)
