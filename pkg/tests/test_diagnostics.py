import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vonmises_prandtl import diagnostics as dg
from vonmises_prandtl.fields import Trajectory, WField, make_grid
from vonmises_prandtl.march import MarchConfig, march
from vonmises_prandtl.von_mises import gaussian_concave_u0, w0_from_u0, wbar_field


@pytest.fixture(scope="module")
def short_run(profile):
    cfg = MarchConfig(x_end=200.0, cells=400, dx0=5e-3)
    w0 = w0_from_u0(gaussian_concave_u0(), cfg.grid())
    t = march(cfg, w0, profile)
    ref = march(cfg, wbar_field(profile, cfg.grid(), 0.0))
    return t, ref


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.1, 10.0))
def test_power_law_recovered(rate, amp):
    x = 2.0 ** np.arange(0, 14, 0.25) - 1.0
    v = amp * (x + 1.0) ** -rate
    g = make_grid(4, 1.0)
    t = Trajectory(tuple(WField(float(xx), g, np.zeros(5)) for xx in x))
    fit = dg.sup_norm_decay(t, "phi", None, series=(x[1:], v[1:]))
    assert fit.exponent == pytest.approx(rate, rel=1e-9)
    assert fit.amplitude == pytest.approx(amp, rel=1e-9)


def test_bounded_series_screens_growth():
    # checkpoints are geometric in x + 1
    x = np.geomspace(11, 1e4 + 1, 50) - 1.0
    assert dg.bounded_series(x, 1.0 / np.log(x))["passed"]
    assert not dg.bounded_series(x, np.log(x), max_onset=None)["passed"]


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 2.0))
def test_gaussian_tail_recovered(c):
    s = np.linspace(0.0, 80.0, 4000)
    fit = dg.fit_gaussian_tail(s, 3.0 * np.exp(-c * s), 10.0)
    assert fit.c == pytest.approx(c, rel=1e-6)


def test_tail_fit_needs_nodes():
    with pytest.raises(ValueError):
        dg.fit_gaussian_tail(np.linspace(0, 1, 5), np.ones(5), 10.0)


def test_damping_coefficient_on_blasius(profile):
    g = make_grid(800, 40.0)
    w = wbar_field(profile, g, 3.0)
    a = dg.damping_A(w, profile)
    lo, hi = dg.lambda_k0(profile)
    assert a[0] == pytest.approx(0.25 / 4.0)
    assert np.all(a[1:-1] >= 0.0)
    assert lo <= 0.25 <= hi


def test_phi_vanishes_on_blasius(profile):
    g = make_grid(200, 30.0)
    w = wbar_field(profile, g, 2.0)
    assert np.abs(dg.phi(w, profile)).max() < 1e-14
    assert np.abs(dg.phi(w, profile, reference=w)).max() == 0.0


def test_reference_must_match(profile):
    w = wbar_field(profile, make_grid(20, 10.0), 2.0)
    r = wbar_field(profile, make_grid(20, 10.0), 3.0)
    with pytest.raises(ValueError):
        dg.phi(w, profile, r)


def test_comparison_bracket(short_run, profile):
    r = dg.comparison_ratio(short_run[0], profile)
    assert r["within_bracket"]


def test_main_residual_within_scheme_error(short_run, profile):
    t = short_run[0]
    for k in range(1, len(t)):
        assert dg.main_residual(t[k], profile)["passed"]


def test_derivative_fields(short_run, profile):
    t, ref = short_run
    d = dg.derivative_fields(t, len(t) - 1, profile, ref)
    assert d["one_sided"]
    assert not d["flag"]
    with pytest.raises(ValueError):
        dg.derivative_fields(t, 0, profile)


def test_euler_reconstruction_of_blasius(profile):
    g = make_grid(3000, 60.0)
    w = wbar_field(profile, g, 3.0)
    y = np.linspace(0.05, 12.0, 50)
    e = dg.euler_reconstruct(w, profile, y)
    assert np.abs(e["u_minus_ubar"]).max() < 1e-4
    with pytest.raises(ValueError):
        dg.euler_reconstruct(w, profile, [1e6])


def test_envelope_dominates(short_run, profile):
    t, ref = short_run
    env = dg.y_envelope(t, profile, ref)
    assert env["dominates"] and min(env["a"], env["b"], env["d"]) >= 0.0


def test_fit_written(short_run, profile, tmp_path):
    t, ref = short_run
    fit = dg.sup_norm_decay(t, "phi", profile, reference=ref)
    csv_path, json_path = dg.write_fit(fit, tmp_path)
    assert csv_path.read_text().startswith("x,value,model")
    assert '"exponent"' in json_path.read_text()


def test_unknown_quantity(short_run, profile):
    with pytest.raises(ValueError):
        dg.quantity_series(short_run[0], "nope", profile)
