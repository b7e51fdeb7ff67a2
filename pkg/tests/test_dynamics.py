import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortlab.dynamics import (
    SimConfig,
    TimeSeries,
    fit_blowup,
    integrate_fixed,
    run_simulation,
    spatial_spread,
    step,
)
from vortlab.geometry import EllipseDomain, PeriodicBox, RectangleDomain, build_masked_grid, unit_disk
from vortlab.models import ModelSpec
from vortlab.verify import heat_mode_error, richardson_order, self_similar_spread

BLOWUP_CFG = SimConfig(dt0=0.01, t_end=2.0, output_every=1)


@pytest.fixture(scope="module")
def disk_run():
    spec = ModelSpec("model1", build_masked_grid(unit_disk(), 64))
    return spec, run_simulation(spec, 2.0, BLOWUP_CFG)


@pytest.fixture(scope="module")
def ellipse_run():
    spec = ModelSpec("model1prime", build_masked_grid(EllipseDomain(1.0, 1.0, 1.0), 64))
    return spec, run_simulation(spec, 4.0, BLOWUP_CFG)


# -------------------------------------------------------------------- step


def test_single_step_matches_riccati():
    spec = ModelSpec("model1", build_masked_grid(unit_disk(), 32))
    dt = 1e-3
    w = step(spec, np.full((32, 32), 2.0), dt)
    err = np.abs(w[spec.domain.interior] - 2 / (1 - dt)).max()
    assert err <= 1e-14 + dt**5


@pytest.mark.parametrize(
    "variant,make",
    [
        ("model1", lambda: build_masked_grid(unit_disk(), 16)),
        ("system32", lambda: RectangleDomain(16)),
        ("zero_order_3d", lambda: PeriodicBox(3, 8)),
        ("clm", lambda: PeriodicBox(1, 16)),
        ("perturbed", lambda: PeriodicBox(2, 16)),
    ],
)
def test_zero_stays_zero(variant, make):
    spec = ModelSpec(variant, make(), convection=variant == "perturbed", diffusion=variant == "perturbed")
    assert not step(spec, np.zeros(spec.state_shape), 0.1).any()


def test_ifrk4_heat_mode():
    assert heat_mode_error(dt=0.1) <= 1e-6


def test_ifrk4_is_exact_for_any_step():
    box = PeriodicBox(2, 16)
    spec = ModelSpec("perturbed", box, diffusion=True, reaction=False)
    X1, X2 = box.mesh()
    w0 = np.cos(3 * X1 - X2)
    assert np.allclose(step(spec, w0, 2.0, "ifrk4"), np.exp(-20.0) * w0, atol=1e-15)


def test_richardson_order():
    order, errs = richardson_order()
    assert abs(order - 4.0) <= 0.2
    assert errs[1] < errs[0]


def test_ifrk4_needs_periodic_domain():
    spec = ModelSpec("model1", RectangleDomain(8))
    with pytest.raises(ValueError):
        run_simulation(spec, 1.0, SimConfig(integrator="ifrk4", t_end=0.1))


def test_incompatible_initial_data():
    spec = ModelSpec("system32", RectangleDomain(8))
    with pytest.raises(ValueError):
        run_simulation(spec, np.zeros((3, 8, 8)), SimConfig(t_end=0.1))
    with pytest.raises(ValueError):
        run_simulation(ModelSpec("model1", RectangleDomain(8)), np.full((8, 8), np.nan), SimConfig(t_end=0.1))


# ------------------------------------------------------------------ config


@pytest.mark.parametrize(
    "kwargs",
    [dict(dt0=0.0), dict(t_end=-1.0), dict(blowup_threshold=1.0), dict(integrator="euler"), dict(output_every=0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_timeseries_requires_increasing_t():
    ts = TimeSeries()
    ts.append(0.0, 1, 1, 1)
    with pytest.raises(ValueError):
        ts.append(0.0, 1, 1, 1)


# ------------------------------------------------------------- blow-up runs


def test_disk_blowup(disk_run):
    _, res = disk_run
    r = res.report
    assert res.status == "blowup"
    assert r.detected
    assert 0.99 <= r.T_hat <= 1.01
    assert 0.95 <= r.exponent_hat <= 1.05
    assert r.last_t < r.T_hat
    assert abs(r.T_hat_reciprocal - 1.0) <= 0.01


def test_disk_self_similar(disk_run):
    spec, res = disk_run
    assert self_similar_spread(res, res.report.T_hat, spec) <= 0.01


@pytest.mark.parametrize("which", ["disk_run", "ellipse_run"])
def test_spatial_constancy(which, request):
    spec, res = request.getfixturevalue(which)
    T = res.report.T_hat
    checked = 0
    for t, w in res.snapshots:
        if t < 0.99 * T:
            assert spatial_spread(spec, w) < 1e-6 * np.abs(w[spec.domain.interior]).max()
            checked += 1
    assert checked > 50


def test_model1prime_blowup(ellipse_run):
    _, res = ellipse_run
    assert res.report.detected
    assert 0.99 <= res.report.T_hat <= 1.01


def test_zero_data_no_blowup():
    spec = ModelSpec("model1", build_masked_grid(unit_disk(), 32))
    res = run_simulation(spec, 0.0, SimConfig(t_end=1.0))
    assert res.status == "completed" and not res.report.detected
    assert not res.final.any()
    t, sup, l2, mean = res.series.arrays()
    assert t[-1] == pytest.approx(1.0)
    assert not sup.any() and not l2.any() and not mean.any()


def test_determinism():
    spec = ModelSpec("perturbed", PeriodicBox(2, 32), convection=True, diffusion=True)
    X1, X2 = spec.domain.mesh()
    w0 = 0.3 * np.sin(X1) * np.cos(2 * X2)
    cfg = SimConfig(dt0=0.01, t_end=0.2, output_every=5)
    a = run_simulation(spec, w0, cfg)
    b = run_simulation(spec, w0, cfg)
    assert a.series == b.series
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a.snapshots, b.snapshots))


def test_snapshot_cadence():
    spec = ModelSpec("model1", RectangleDomain(16))
    res = run_simulation(spec, 0.0, SimConfig(dt0=0.01, t_end=0.1, output_every=5))
    assert [round(t, 12) for t, _ in res.snapshots] == [0.0, 0.05, 0.1]


def test_step_halving_underflow():
    # growth limit below what any step achieves forces halving down to min_dt
    spec = ModelSpec("model1", build_masked_grid(unit_disk(), 16))
    cfg = SimConfig(dt0=0.1, t_end=1.0, max_growth=1e-12, min_dt=1e-6)
    res = run_simulation(spec, 2.0, cfg)
    assert res.status == "dt_underflow"
    assert not res.report.detected


def test_integrate_fixed_reaches_t_end():
    spec = ModelSpec("model1", build_masked_grid(unit_disk(), 32))
    w = integrate_fixed(spec, 2.0, 0.01, 0.5)
    assert np.allclose(w[spec.domain.interior], 4.0, rtol=1e-8)


# ------------------------------------------------------------------ fitting


def test_fit_reciprocal_linear():
    t = np.linspace(0.90, 0.99, 10)
    r = fit_blowup((t, 1 / (1 - t)))
    assert r.detected
    assert abs(r.T_hat - 1.0) <= 1e-6
    assert r.exponent_hat == pytest.approx(1.0, abs=1e-6)


def test_fit_inverse_square():
    t = np.linspace(1.5, 1.99, 50)
    r = fit_blowup((t, 3 / (2 - t) ** 2))
    assert r.T_hat == pytest.approx(2.0, abs=1e-3)
    assert abs(r.exponent_hat - 2.0) <= 0.01


@given(T=st.floats(0.5, 5.0), p=st.floats(0.5, 3.0), C=st.floats(0.1, 10.0))
def test_fit_recovers_synthetic_laws(T, p, C):
    # sample densely enough that the fitted window holds >= 10 points
    t = T - np.geomspace(T, 1e-3 * T, 200)
    r = fit_blowup((t, C / (T - t) ** p))
    assert r.detected
    assert r.T_hat == pytest.approx(T, rel=1e-6)
    assert r.exponent_hat == pytest.approx(p, rel=1e-4)


def test_fit_insufficient_growth():
    t = np.linspace(0, 1, 30)
    r = fit_blowup((t, 1 + t))
    assert not r.detected
    assert "decade" in r.message


def test_fit_too_few_samples():
    r = fit_blowup((np.array([0.0, 0.5, 0.9]), np.array([1.0, 2.0, 100.0])))
    assert not r.detected


def test_fit_on_disk_series(disk_run):
    _, res = disk_run
    r = fit_blowup(res.series)
    assert abs(r.T_hat - 1.0) <= 0.01
