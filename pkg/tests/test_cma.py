import math

import numpy as np
import pytest
from scipy import stats

from hdcontour import cma
from hdcontour.cma import CmaModel, DependenceFn, FitFailure, Weibull3
from hdcontour.core import Dataset, GridAxis, total_mass
from hdcontour.synth import DEFAULT_GENERATOR, generate_synthetic


def test_weibull_pdf_matches_scipy():
    x = np.linspace(0.0, 12.0, 97)
    ours = cma.weibull_pdf(x, 2.3, 1.7, 0.4)
    ref = stats.weibull_min.pdf(x, 1.7, loc=0.4, scale=2.3)
    assert np.allclose(ours, ref, rtol=1e-12, atol=1e-300)


def test_weibull3_cdf_ppf_inverse():
    w = Weibull3(1.8, 1.4, 0.2)
    q = np.array([1e-9, 0.01, 0.5, 0.99, 1 - 1e-12])
    assert np.allclose(w.cdf(w.ppf(q)), q, rtol=1e-9)
    assert w.pdf(0.1) == 0.0


def test_fit_weibull2_exponential_special_case():
    rng = np.random.default_rng(0)
    x = rng.exponential(3.0, 50_000)
    scale, shape = cma.fit_weibull2(x)
    assert shape == pytest.approx(1.0, abs=0.02)
    assert scale == pytest.approx(3.0, rel=0.02)


def test_fit_weibull2_matches_scipy_mle():
    rng = np.random.default_rng(1)
    x = stats.weibull_min.rvs(2.2, scale=7.0, size=3000, random_state=rng)
    scale, shape = cma.fit_weibull2(x)
    c, _, s = stats.weibull_min.fit(x, floc=0.0)
    assert shape == pytest.approx(c, rel=1e-5)
    assert scale == pytest.approx(s, rel=1e-5)


def test_fit_weibull3_recovers_parameters():
    rng = np.random.default_rng(2)
    x = Weibull3(2.0, 1.5, 0.5).rvs(100_000, rng)
    w = cma.fit_weibull3(x)
    assert w.scale == pytest.approx(2.0, rel=0.02)
    assert w.shape == pytest.approx(1.5, rel=0.02)
    assert w.location == pytest.approx(0.5, abs=0.02)


def test_fit_weibull3_is_a_local_maximum():
    rng = np.random.default_rng(3)
    x = Weibull3(1.8, 1.4, 0.2).rvs(5000, rng)
    w = cma.fit_weibull3(x)
    best = w.loglike(x)
    # +/-5% lattice around the optimum (location stays below the sample minimum)
    for fs in np.linspace(0.95, 1.05, 10):
        for fk in np.linspace(0.95, 1.05, 10):
            for fl in np.linspace(0.95, 1.05, 10):
                loc = min(w.location * fl, x.min() * (1 - 1e-9))
                assert Weibull3(w.scale * fs, w.shape * fk, loc).loglike(x) <= best + 1e-6


def test_fit_weibull3_failures():
    with pytest.raises(FitFailure):
        cma.fit_weibull3(np.full(200, 1.3))
    with pytest.raises(FitFailure):
        cma.fit_weibull3(np.linspace(1, 2, 10))
    with pytest.raises(FitFailure):
        cma.fit_weibull3(np.append(np.linspace(1, 2, 100), 0.0))


def test_dependence_fn():
    f = DependenceFn(2.5, 3.5, 1.0)
    assert f(2.0) == pytest.approx(9.5)
    assert f.as_tuple() == (2.5, 3.5, 1.0)


def test_fit_conditional_independent_data_has_flat_scale():
    rng = np.random.default_rng(4)
    hs = Weibull3(1.8, 1.4, 0.2).rvs(60_000, rng)
    v = stats.weibull_min.rvs(2.0, scale=8.0, size=hs.size, random_state=rng)
    model = cma.fit_conditional(Dataset(hs, v))
    bins = model.fit_report["bins"]
    scales = np.array([b["v_scale"] for b in bins])
    counts = np.array([b["count"] for b in bins])
    big = counts >= 1000
    assert np.allclose(scales[big], 8.0, rtol=0.03)
    h = np.linspace(0.5, 4.0, 8)
    assert np.allclose(model.v_scale(h), 8.0, rtol=0.03)


def test_fit_conditional_too_few_samples():
    ds = generate_synthetic(10, 0)
    with pytest.raises(FitFailure) as info:
        cma.fit_conditional(ds)
    assert "counts" in info.value.diagnostics


def test_fit_conditional_report_contents():
    ds = generate_synthetic(20_000, 5)
    model = cma.fit_conditional(ds)
    rep = model.report()
    assert rep["method"] == "cma"
    assert set(rep["v_scale"]) == {"c1", "c2", "c3"}
    assert rep["refined"] is False
    assert all(b["count"] >= 100 for b in rep["bins"])
    assert all(b["hs_low"] <= b["hs_mean"] < b["hs_high"] for b in rep["bins"])


def test_refine_does_not_lower_likelihood():
    ds = generate_synthetic(20_000, 6)
    plain = cma.fit_conditional(ds)
    refined = cma.fit_conditional(ds, refine=True)
    log_h, log_v = np.log(ds.hs), np.log(ds.v)
    nll = lambda m: cma._conditional_nll(m.v_scale.as_tuple() + m.v_shape.as_tuple(), log_h, log_v)
    assert nll(refined) <= nll(plain) + 1e-9
    assert refined.fit_report["refined"] is True


@pytest.fixture(scope="module")
def model_grid():
    ax = GridAxis.spanning(0.0, 12.0, 0.05)
    ay = GridAxis.spanning(0.0, 60.0, 0.05)
    return DEFAULT_GENERATOR, cma.evaluate_cma(DEFAULT_GENERATOR, ax, ay)


def test_evaluate_zero_below_location(model_grid):
    model, grid = model_grid
    h = grid.hs_axis.coords
    assert np.all(grid.values[h <= model.hs_marginal.location] == 0.0)


def test_evaluate_scalar_oracle(model_grid):
    model, grid = model_grid
    for i, j in [(30, 100), (60, 200), (100, 300), (150, 500)]:
        h, v = grid.hs_axis.coords[i], grid.v_axis.coords[j]
        m = model.hs_marginal
        f_h = stats.weibull_min.pdf(h, m.shape, loc=m.location, scale=m.scale)
        sc, sh = model.conditional(h)
        f_v = stats.weibull_min.pdf(v, sh, scale=sc)
        assert grid.values[i, j] == pytest.approx(f_h * f_v, rel=1e-12)


def test_evaluate_rows_integrate_to_one(model_grid):
    model, grid = model_grid
    h = grid.hs_axis.coords
    marg = model.hs_marginal.pdf(h)
    ok = (marg > 1e-6) & (h < 8.0)
    rows = grid.values[ok].sum(axis=1) * grid.v_axis.step / marg[ok]
    assert np.allclose(rows, 1.0, atol=1e-2)


def test_evaluate_total_mass(model_grid):
    _, grid = model_grid
    assert total_mass(grid) == pytest.approx(1.0, abs=1e-2)


def test_evaluate_domain_error():
    bad = CmaModel(Weibull3(1.8, 1.4, 0.2), DependenceFn(-1.0, 0.5, 1.0), DependenceFn(2.0, 0.5, 1.5))
    with pytest.raises(cma.EvaluationDomainError):
        cma.evaluate_cma(bad, GridAxis(0.0, 0.1, 50), GridAxis(0.0, 0.1, 50))


def test_sample_matches_model_quantiles():
    rng = np.random.default_rng(12)
    hs, v = DEFAULT_GENERATOR.sample(200_000, rng)
    m = DEFAULT_GENERATOR.hs_marginal
    assert np.median(hs) == pytest.approx(float(m.ppf(0.5)), rel=0.01)
    # conditional check in a narrow Hs band
    band = (hs > 2.0) & (hs < 2.1)
    sc, sh = DEFAULT_GENERATOR.conditional(2.05)
    assert np.median(v[band]) == pytest.approx(sc * math.log(2.0) ** (1 / sh), rel=0.02)


def test_flat_dependence_does_not_blow_up_the_grid():
    # bimodal wind speeds independent of Hs: per-bin parameters are flat and
    # noisy, so the exponent is unidentifiable
    rng = np.random.default_rng(3)
    n = 40_000
    hs = Weibull3(1.5, 1.6, 0.1).rvs(n, rng)
    regime = rng.random(n) < 0.5
    v = np.where(regime, rng.normal(4.0, 0.4, n), rng.normal(20.0, 0.6, n)).clip(0.05)
    model = cma.fit_conditional(Dataset(hs, v))
    assert 0.01 <= model.v_scale.c3 <= 10.0
    try:
        hs_axis, v_axis = cma.default_axes_cma(model)
    except FitFailure as exc:
        assert "v_max" in exc.diagnostics
    else:
        assert hs_axis.count * v_axis.count <= cma.MAX_GRID_CELLS


def test_weibull_pdf_far_tail_is_zero_not_nan():
    out = cma.weibull_pdf(np.array([1e6, 5.0]), 1.0, 50.0)
    assert out[0] == 0.0 and np.isfinite(out[1])
