import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vonmises_prandtl import barrier as br
from vonmises_prandtl.fields import make_grid
from vonmises_prandtl.von_mises import wbar_field


@pytest.fixture(scope="module")
def specs(profile):
    return {k: br.build_barrier(k, profile) for k in br.KINDS}


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(br.KINDS), st.floats(0.5, 200.0), st.floats(0.02, 12.0))
def test_closed_form_derivatives_match_differences(specs, kind, x, h):
    spec = specs[kind]
    K = x + 1.0
    assume(all(abs(h - r) > 0.05 for r in spec.ridges + tuple(pc.lo for pc in spec.pieces)))
    psi = h * math.sqrt(K)
    g, gx, gp, gpp = (float(v[0]) for v in br.barrier_terms(spec, x, psi))
    assume(abs(g) > 1e-200)
    ex, ep = 1e-5 * K, 1e-4 * math.sqrt(K)

    def val(xx, pp):
        return float(br.barrier_terms(spec, xx, pp)[0][0])

    fx = (val(x + ex, psi) - val(x - ex, psi)) / (2 * ex)
    fp = (val(x, psi + ep) - val(x, psi - ep)) / (2 * ep)
    fpp = (val(x, psi + ep) - 2 * g + val(x, psi - ep)) / ep**2
    scale = abs(g) / K
    assert gx == pytest.approx(fx, abs=1e-4 * scale, rel=1e-4)
    assert gp == pytest.approx(fp, abs=1e-4 * abs(g) / math.sqrt(K), rel=1e-4)
    assert gpp == pytest.approx(fpp, abs=1e-3 * scale, rel=1e-3)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([k for k in br.KINDS if k not in ("exp-tail", "dxphi")]), st.floats(0.0, 1e4))
def test_ridges_continuous_with_downward_slope_jump(specs, kind, x):
    for r in br.ridge_verify(specs[kind], x):
        assert r["continuous"], r
        assert r["ridge"], r


def test_sharp_barrier_vanishes_at_wall(specs):
    assert br.eval_barrier(specs["sharp"], 3.0, 0.0) == 0.0


@pytest.mark.parametrize("kind, constants, condition", [
    ("exp-tail", {"eps": 0.3}, "eps"),
    ("algebraic", {"M": 1.0, "h0": 0.5}, "h0 > 1/M"),
    ("sharp", {"alpha": 1.5}, "alpha"),
    ("small-h", {"alpha": -0.1}, "alpha > 0"),
    ("dxphi", {"eps": 0.0}, "eps > 0"),
    ("d2xw-cos", {"h1": 4.0}, "3*pi/2"),
    ("d2xw-alg", {"alpha": 0.2}, "1/8"),
    ("d2xw-alg", {"h0": 1.5}, "h0 in (0, 1)"),
])
def test_side_conditions(profile, kind, constants, condition):
    with pytest.raises(br.BarrierError, match="side condition") as info:
        br.build_barrier(kind, profile, constants)
    assert condition in str(info.value)


def test_unknown_kind(profile):
    with pytest.raises(br.BarrierError):
        br.build_barrier("parabolic", profile)


def test_pieces_must_cover_half_line():
    with pytest.raises(br.BarrierError):
        br.BarrierSpec("exp-tail", (br.Piece(0.0, 1.0, "zero", {}),), {})
    with pytest.raises(br.BarrierError):
        br.BarrierSpec("exp-tail", (br.Piece(0.0, 1.0, "zero", {}), br.Piece(2.0, math.inf, "zero", {})), {})


def test_ridge_inside_region_rejected(profile, specs):
    with pytest.raises(br.BarrierError):
        br.residual_check(specs["sharp"], None, profile, (0.0, 1.0), x=3.0)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["exp-tail", "sharp", "dxphi", "d2xw-cos"]), st.sampled_from([1.0, 10.0, 100.0]),
       st.floats(0.9, 1.1))
def test_residual_sign_stable_under_sample_doubling(profile, kind, x, ratio):
    spec = br.build_barrier(kind, profile, {"K": 128.0} if kind == "dxphi" else {"B": 128.0} if kind == "sharp" else {})
    for region in br.claimed_regions(spec):
        a = br.residual_check(spec, None, profile, region, x=x, samples=1001, ratio=ratio)
        b = br.residual_check(spec, None, profile, region, x=x, samples=2001, ratio=ratio)
        assert a["passed"] == b["passed"]


def test_exp_tail_margin_positive(profile):
    g = make_grid(1000, 60.0)
    w = wbar_field(profile, g, 10.0)
    spec = br.build_barrier("exp-tail", profile, {"eps": 0.05})
    margin = br.exp_tail_margin(spec, w)
    assert margin > 0
    with pytest.raises(br.BarrierError):
        br.exp_tail_margin(br.build_barrier("sharp", profile), w)


def test_search_threshold_finds_first_passing_value(profile):
    res = br.search_threshold(lambda v: br.build_barrier("d2xw-cos", profile, {"h1": v}),
                              lambda s: s.constants["h1"] >= 20.0, 5.0, 2.0)
    assert res["found"] and res["threshold"] == 20.0


def test_standalone_certificate(profile, tmp_path):
    cert = br.certify("exp-tail", profile, samples=801)
    assert cert["passed"]
    assert cert["constants"]["eps"] > 0 and cert["grid_density"] == 801
    path = br.write_certificate(cert, tmp_path / "c.json")
    back = json.loads(path.read_text())
    assert back["kind"] == "exp-tail" and back["passed"]


def test_claimed_regions_skip_ridges(specs):
    for spec in specs.values():
        for lo, hi in br.claimed_regions(spec):
            assert not any(lo < r < hi for r in spec.ridges)
