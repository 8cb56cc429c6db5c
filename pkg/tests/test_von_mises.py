import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vonmises_prandtl.blasius import eval_blasius
from vonmises_prandtl.fields import (PsiGrid, Trajectory, WField, default_psi_max, first_difference, make_grid,
                                     second_difference)
from vonmises_prandtl.von_mises import (blasius_u0, gaussian_concave_u0, similarity_coords, w0_from_u0,
                                        wall_ratio_bounds, wbar, wbar_field, wbar_terms, y_image, y_of_psi)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 60), st.floats(1.0, 3.0), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_differences_exact_on_quadratics(cells, grading, a, b, c):
    g = make_grid(cells, 5.0, grading)
    v = a + b * g.nodes + c * g.nodes**2
    assert np.allclose(second_difference(g.nodes, v)[1:-1], 2 * c, atol=1e-8)
    assert np.allclose(first_difference(g.nodes, v)[1:-1], b + 2 * c * g.nodes[1:-1], atol=1e-8)


def test_grid_validation():
    with pytest.raises(ValueError):
        PsiGrid(nodes=np.array([0.0, 2.0, 1.0]), psi_max=2.0, grading=2.0)
    with pytest.raises(ValueError):
        default_psi_max(10.0, k=4.0)
    g = make_grid(8, 4.0)
    assert np.all(np.isin(g.nodes, g.refined().nodes))


def test_trajectory_requires_increasing_stations():
    g = make_grid(4, 1.0)
    w = WField(0.0, g, np.linspace(0, 1, 5))
    with pytest.raises(ValueError):
        Trajectory((w, w))


def test_wbar_derivatives_match_differences(profile):
    x, psi = 3.0, np.linspace(0.5, 6.0, 12)
    w, dpsi, dx = wbar(profile, x, psi)
    e = 1e-5
    assert np.allclose(dpsi, (wbar(profile, x, psi + e)[0] - wbar(profile, x, psi - e)[0]) / (2 * e), atol=1e-7)
    assert np.allclose(dx, (wbar(profile, x + e, psi)[0] - wbar(profile, x - e, psi)[0]) / (2 * e), atol=1e-7)


def test_wbar_solves_equation(profile):
    t = wbar_terms(profile, 5.0, np.linspace(0.1, 10.0, 50))
    assert np.allclose(t["dx"], np.sqrt(t["w"]) * t["dpsi2"], atol=1e-12)


def test_y_image_recovers_similarity_height(profile):
    g = make_grid(4000, 30.0)
    w = wbar_field(profile, g, 3.0)
    y = y_image(w)
    ybar = 2.0 * wbar_terms(profile, 3.0, g.nodes)["zeta"]
    assert np.max(np.abs(y - ybar)[: g.n // 2]) < 2e-3


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 29.0))
def test_y_of_psi_matches_nodes(profile, frac):
    g = make_grid(400, 30.0)
    w = wbar_field(profile, g, 1.0)
    ycum = y_image(w)
    j = int(frac / 30.0 * 400)
    assert y_of_psi(w, g.nodes[j]) == pytest.approx(ycum[j], abs=1e-12)
    assert y_of_psi(w, frac) >= 0.0


def test_similarity_coords(profile):
    s = similarity_coords(profile, 3.0, 2.0)
    assert s.h == pytest.approx(1.0)
    assert eval_blasius(profile, s.zeta)[0] == pytest.approx(1.0, abs=1e-10)
    assert s.y_bar == pytest.approx(2 * s.zeta)


def test_initial_field_from_blasius_data(profile):
    g = make_grid(800, 40.0)
    w0 = w0_from_u0(blasius_u0(profile, 1.0), g)
    assert np.max(np.abs(w0.values - wbar(profile, 0.0, g.nodes)[0])) < 1e-8


def test_gaussian_concave_data():
    d = gaussian_concave_u0(0.5, 1.0)
    y = np.linspace(0, 20, 2001)
    assert d(0.0) == 0.0
    assert d(np.array([40.0]))[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(d.d2u0(y) <= 0.0)
    assert np.allclose(np.gradient(d(y), y)[1:-1], d.du0(y)[1:-1], atol=1e-4)


def test_initial_field_errors(profile):
    g = make_grid(50, 10.0)
    with pytest.raises(ValueError):
        w0_from_u0(lambda y: 0.1 + 0 * y, g)
    with pytest.raises(ValueError):
        blasius_u0(profile, 0.0)


def test_wall_ratio_bounds(profile):
    c, C = wall_ratio_bounds(profile, 1.0)
    assert 0 < c <= C
