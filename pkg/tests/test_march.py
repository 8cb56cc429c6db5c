import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vonmises_prandtl.fields import make_grid
from vonmises_prandtl.march import (MarchConfig, MarchError, _solve_symmetric, checkpoint_stations, march,
                                    read_trajectory, step, thomas, write_trajectory)
from vonmises_prandtl.von_mises import gaussian_concave_u0, w0_from_u0, wbar, wbar_field

SMALL = dict(cells=300, dx0=1e-2)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(0.1, 5.0)),
    arrays(float, n, elements=st.floats(-10.0, 10.0)))))
def test_symmetric_solver_matches_thomas(data):
    off, rhs = data
    n = off.size
    off = -off[: n - 1]
    diag = np.abs(np.concatenate([[0.0], off])) + np.abs(np.concatenate([off, [0.0]])) + 1.0
    a = _solve_symmetric(diag.copy(), off.copy(), rhs.copy())
    b = thomas(off, diag, off, rhs)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-10)


def test_thomas_rejects_zero_pivot():
    with pytest.raises(MarchError):
        thomas([1.0], [0.0, 1.0], [1.0], [1.0, 1.0])


def test_checkpoint_stations():
    xs = checkpoint_stations(100.0, 2.0)
    assert xs[0] == 0.0 and xs[-1] == 100.0
    assert np.allclose(xs[1:-1] + 1.0, 2.0 ** np.arange(1, xs.size - 1))


@pytest.mark.parametrize("kw", [{"dx0": 0.0}, {"x_end": -1.0}, {"picard_iters": 0}, {"scheme": "euler"},
                                {"checkpoint_ratio": 1.0}, {"step_growth": 0.0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        MarchConfig(**kw)


def test_march_preserves_boundary_values_and_sign(profile):
    cfg = MarchConfig(x_end=20.0, **SMALL)
    w0 = w0_from_u0(gaussian_concave_u0(), cfg.grid())
    t = march(cfg, w0, profile)
    for c in t:
        a = c.meta["audit"]
        assert a["wall_zero"] and a["far_one"] and a["nonnegative"]
        assert c.values.min() >= 0.0


def test_march_tracks_blasius(profile):
    cfg = MarchConfig(x_end=10.0, **SMALL)
    t = march(cfg, wbar_field(profile, cfg.grid(), 0.0))
    err = np.abs(t[-1].values - wbar(profile, 10.0, t.grid.nodes)[0]).max()
    assert err < 5e-3


def test_crank_nicolson_variant_runs(profile):
    cfg = MarchConfig(x_end=5.0, scheme="crank-nicolson-frozen", **SMALL)
    t = march(cfg, wbar_field(profile, cfg.grid(), 0.0))
    assert np.abs(t[-1].values - wbar(profile, 5.0, t.grid.nodes)[0]).max() < 5e-3


def test_single_step(profile):
    g = make_grid(200, 30.0)
    w = step(wbar_field(profile, g, 0.0), 0.01)
    assert w.x == pytest.approx(0.01)
    assert w.values[0] == 0.0 and w.values[-1] == 1.0


def test_rejects_bad_initial_field(profile):
    cfg = MarchConfig(x_end=1.0, **SMALL)
    w0 = wbar_field(profile, cfg.grid(), 0.0)
    bad = type(w0)(x=0.0, grid=w0.grid, values=np.where(w0.psi > 0, 0.5, 0.0))
    with pytest.raises(ValueError):
        march(cfg, bad)


def test_trajectory_round_trip(profile, tmp_path):
    cfg = MarchConfig(x_end=3.0, **SMALL)
    t = march(cfg, wbar_field(profile, cfg.grid(), 0.0))
    write_trajectory(t, tmp_path)
    u = read_trajectory(tmp_path)
    assert np.array_equal(u.x, t.x)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(t, u))


def test_march_is_deterministic(profile):
    cfg = MarchConfig(x_end=3.0, **SMALL)
    w0 = wbar_field(profile, cfg.grid(), 0.0)
    a, b = march(cfg, w0), march(cfg, w0)
    assert all(np.array_equal(p.values, q.values) for p, q in zip(a, b))
