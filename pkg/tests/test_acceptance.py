"""Acceptance criteria 1-12. Each test records one pass/fail line, printed in
the terminal summary."""

import math
import time

import numpy as np
import pytest

from vonmises_prandtl import analysis
from vonmises_prandtl import blasius as bl
from vonmises_prandtl.barrier import RIDGE_STATIONS, build_barrier, certify, exp_tail_margin, ridge_verify
from vonmises_prandtl.march import MarchConfig, march, self_similarity_oracle
from vonmises_prandtl.von_mises import blasius_u0, gaussian_concave_u0, w0_from_u0, wbar_field

X_END = 1e4
DERIVED = ("dx_phi", "dpsi_phi", "dpsi2_phi", "dpsix_w", "dx2_w")


@pytest.fixture(scope="module")
def runs(profile):
    cfg = MarchConfig(x_end=X_END)
    grid = cfg.grid()
    out = {"reference": march(cfg, wbar_field(profile, grid, 0.0))}
    out["shift"] = march(cfg, w0_from_u0(blasius_u0(profile, 2.0), grid), profile)
    out["gauss"] = march(cfg, w0_from_u0(gaussian_concave_u0(), grid), profile)
    return out


def _data(runs):
    return [("shift", runs["shift"]), ("gauss", runs["gauss"])]


def test_criterion_01_shooting(criterion):
    t0 = time.perf_counter()
    p = bl.solve_blasius()
    elapsed = time.perf_counter() - t0
    n = int(math.ceil(p.zeta_max / 0.01))
    drift = abs(bl._bisect(p.zeta_max, n, 1e-12) - bl._bisect(p.zeta_max, 2 * n, 1e-12))
    res = float(np.max(np.abs(bl.ode_residual(p))))
    ok = abs(p.b0 - 0.332057) <= 1e-4 and drift <= 1e-8 and res <= 1e-9 and elapsed < 1.0
    assert criterion(1, "Blasius shooting", ok,
                     f"b0={p.b0:.10f} halving drift={drift:.1e} residual={res:.1e} time={elapsed:.2f}s")


def test_criterion_02_origin_derivatives(profile, criterion):
    f3, f4, f5 = bl.check_origin_derivatives(profile)
    ok = abs(f3) <= 1e-6 and abs(f4) <= 1e-5 and abs(f5 + 0.5 * profile.b0**2) <= 1e-5 and f5 < 0
    assert criterion(2, "origin derivatives", ok, f"f3={f3:.1e} f4={f4:.1e} f5={f5:.6f}")


def test_criterion_03_tail_constants(profile, criterion):
    c1, _, rms = bl.fit_tail_constants(profile)
    assert criterion(3, "Blasius tail constants", abs(c1 - 0.25) <= 0.01 and rms <= 0.05,
                     f"c1={c1:.4f} rms={rms:.3f}")


def test_criterion_04_self_similarity(profile, criterion):
    t0 = time.perf_counter()
    r = self_similarity_oracle(MarchConfig(x_end=100.0), profile)
    elapsed = time.perf_counter() - t0
    ok = r["errors"][0] <= 1e-3 and r["order_x"] >= 1.0 and r["order_psi"] >= 1.9 and elapsed < 30.0
    assert criterion(4, "self-similarity oracle", ok,
                     f"error={r['errors'][0]:.2e} order_x={r['order_x']:.3f} "
                     f"order_psi={r['order_psi']:.3f} time={elapsed:.1f}s")


def test_criterion_05_comparison_bracket(runs, profile, criterion):
    rows = {name: analysis.bracket(t, profile) for name, t in _data(runs)}
    detail = " ".join(f"{n}: [{min(r['c_min']):.4f}, {max(r['C_max']):.4f}] from "
                      f"[{r['initial'][0]:.4f}, {r['initial'][1]:.4f}]" for n, r in rows.items())
    assert criterion(5, "comparison bracket to x=1e4", all(r["passed"] for r in rows.values()), detail)


def test_criterion_06_concavity(runs, criterion):
    rows = {name: analysis.concavity(t) for name, t in _data(runs)}
    detail = " ".join(f"{n}: max d_x w={r['worst']:.1e}" for n, r in rows.items())
    assert criterion(6, "concavity preserved", all(r["passed"] for r in rows.values()), detail)


def test_criterion_07_phi_decay(runs, profile, criterion):
    ref = runs["reference"]
    ok, parts = True, []
    for name, t in _data(runs):
        rec = analysis.decay_fits(t, profile, ref, quantities=("phi",))["phi"]
        x, scaled = np.array(rec["x"]), np.array(rec["scaled"])
        screen = analysis.bounded_series(x, scaled, onset=10.0, max_onset=None)
        expo = rec["fit"]["exponent"]
        ok &= screen["passed"] and expo >= 0.45
        parts.append(f"{name}: exponent={expo:.3f} bound ratio={screen['ratio']:.2f}")
    orc = analysis.shift_oracle(runs["shift"], profile, 2.0, ref)
    ok &= orc["passed"]
    parts.append(f"shift oracle: measured={orc['measured_exponent']:.3f} "
                 f"closed form={orc['closed_form_exponent']:.3f}")
    assert criterion(7, "phi decay", ok, " ".join(parts))


def test_criterion_08_gaussian_tails(runs, profile, criterion):
    rows = {name: analysis.tails(t, profile, runs["reference"]) for name, t in _data(runs)}
    detail = " ".join(f"{n}: c in [{r['c_min']:.3f}, {r['c_max']:.3f}] max jump={r['max_relative_jump']:.3f}"
                      for n, r in rows.items())
    assert criterion(8, "Gaussian tails", all(r["passed"] for r in rows.values()), detail)


def test_criterion_09_derivative_rates(runs, profile, criterion):
    ok, parts = True, []
    for name, t in _data(runs):
        fits = analysis.decay_fits(t, profile, runs["reference"], quantities=DERIVED)
        for q, rec in fits.items():
            ok &= rec["bounded"]["passed"]
            parts.append(f"{name}.{q}={rec['bounded']['ratio']:.2f}@{rec['bounded']['onset']:.0f}")
    assert criterion(9, "derivative rates", ok, "last-decade/median " + " ".join(parts))


def test_criterion_10_euler_bounds(runs, profile, criterion):
    ok, parts = True, []
    for name, t in _data(runs):
        e = analysis.euler_bounds(t, profile, runs["reference"])
        tail = np.array(e["dyy_tail_c"])
        good = (e["u_bounded"]["passed"] and math.isfinite(e["dyy_lower_constant"]) and e["dyy_upper_ok"]
                and bool(np.all(np.isfinite(tail) & (tail > 0))) and e["envelope"]["dominates"])
        ok &= good
        parts.append(f"{name}: u ratio={e['u_bounded']['ratio']:.2f} C={e['dyy_lower_constant']:.3f} "
                     f"max u_yy={max(e['dyy_u_max']):.1e} tail c>={tail.min():.3f} "
                     f"envelope slack={e['envelope']['min_slack']:.1e}")
    assert criterion(10, "Euler-coordinate bounds", ok, " ".join(parts))


def test_criterion_11_barriers(runs, profile, criterion):
    ref, parts, ok = runs["reference"], [], True
    for name, t in _data(runs):
        exp_tail = certify("exp-tail", profile, t, ref, constants={"eps": 0.05}, search=False)
        spec = build_barrier("exp-tail", profile, {"eps": 0.05})
        margin = min(exp_tail_margin(spec, t.at(x) if x in t.x else t[-1]) for x in RIDGE_STATIONS
                     if x <= t.x[-1])
        sharp = certify("sharp", profile, t, ref)
        dxphi = certify("dxphi", profile, t, ref)
        cos_band = build_barrier("d2xw-cos", profile)
        ridges = [r for x in RIDGE_STATIONS for r in ridge_verify(cos_band, x)]
        cos_ok = all(r["continuous"] and r["ridge"] for r in ridges)
        sharp_ridges = len(sharp["ridge_report"]) == len(RIDGE_STATIONS)
        good = (exp_tail["passed"] and margin > 0 and sharp["passed"] and sharp_ridges
                and sharp["dominance_series"]["passed"] and dxphi["dominance_series"]["passed"] and cos_ok)
        ok &= good
        parts.append(f"{name}: exp-tail margin={margin:.1e} sharp N={sharp['constants']['N']:g} "
                     f"B={sharp['constants']['B']:g} C* phi growth={sharp['dominance_series']['worst_growth']:.2f} "
                     f"C* dx_phi growth={dxphi['dominance_series']['worst_growth']:.2f} cos ridges={cos_ok}")
    assert criterion(11, "barrier certificates", ok, " ".join(parts))


def test_criterion_12_pde_consistency(runs, profile, criterion):
    rows = {name: analysis.residuals(t, profile) for name, t in _data(runs)}
    detail = " ".join(f"{n}: worst residual/scheme error={r['worst_ratio']:.3f}" for n, r in rows.items())
    assert criterion(12, "PDE consistency", all(r["passed"] for r in rows.values()), detail)
