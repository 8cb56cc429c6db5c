"""Measurements on marched trajectories: the perturbation ``phi = w - wbar``,
the damping coefficient ``A``, decay and Gaussian-tail fits, derivative
fields, Euler-coordinate reconstruction and the ``|ybar - y|`` envelope.

Most functions accept ``reference``: a trajectory (or field) marched from
exact Blasius data with the same configuration. Subtracting it instead of
the closed-form ``wbar`` removes the x-discretization bias, which does not
decay in similarity variables, from decay measurements.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .blasius import BlasiusProfile, eval_blasius
from .fields import Trajectory, WField, first_difference, second_difference
from .von_mises import wbar, wbar_terms, y_image

__all__ = [
    "QUANTITIES",
    "DecayFit",
    "TailFit",
    "phi",
    "damping_A",
    "lambda_k0",
    "scheme_error",
    "main_residual",
    "station_fields",
    "derivative_fields",
    "quantity_series",
    "sup_norm_decay",
    "bounded_series",
    "fit_gaussian_tail",
    "gaussian_tail",
    "comparison_ratio",
    "dpsi_w_comparison",
    "euler_reconstruct",
    "y_discrepancy",
    "y_envelope",
    "near_wall_exponent",
    "write_fit",
]

QUANTITIES = ("phi", "dx_phi", "dpsi_phi", "dpsi2_phi", "dpsix_w", "dx2_w")


@dataclass(frozen=True)
class DecayFit:
    """``sup|q| ~ amplitude * (x+1)**(-exponent) [* ln(x+e)]``."""

    quantity: str
    exponent: float
    amplitude: float
    with_log: bool
    rms: float
    window: tuple
    x: np.ndarray = field(repr=False, compare=False)
    values: np.ndarray = field(repr=False, compare=False)

    def model(self, x):
        x = np.asarray(x, dtype=float)
        out = self.amplitude * (x + 1.0) ** (-self.exponent)
        return out * np.log(x + np.e) if self.with_log else out

    def record(self) -> dict:
        return {
            "quantity": self.quantity,
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "with_log": self.with_log,
            "rms": self.rms,
            "window": list(self.window),
        }


@dataclass(frozen=True)
class TailFit:
    """``|q| ~ exp(-c * s)`` with ``s = psi**2/(x+1)`` (or ``y**2/(x+1)``)."""

    c: float
    window: tuple
    rms: float
    nodes: int
    x: float


def _check_reference(w: WField, ref: WField | None):
    if ref is None:
        return
    if abs(ref.x - w.x) > 1e-9 * max(1.0, w.x) or ref.grid.n != w.grid.n:
        raise ValueError("reference must share the station and the grid")


def phi(w: WField, p: BlasiusProfile, reference: WField | None = None) -> np.ndarray:
    """``w - wbar`` at the nodes, ``wbar`` closed form or a marched reference."""
    _check_reference(w, reference)
    base = reference.values if reference is not None else wbar(p, w.x, w.psi)[0]
    return w.values - base


def damping_A(w: WField, p: BlasiusProfile) -> np.ndarray:
    """``A = -d_x wbar / (sqrt(wbar) (sqrt(wbar) + sqrt(w)))``.

    At the wall both fields vanish linearly; the limit is
    ``1 / (2 (x+1) (1 + sqrt(r)))`` with ``r`` the ratio of wall slopes.
    """
    t = wbar_terms(p, w.x, w.psi)
    k = w.x + 1.0
    out = np.empty(w.grid.n)
    sb = np.sqrt(t["w"][1:])
    out[1:] = -t["dx"][1:] / (sb * (sb + np.sqrt(np.maximum(w.values[1:], 0.0))))
    r = w.wall_slope() / (2.0 * p.b0 / np.sqrt(k))
    out[0] = 1.0 / (2.0 * k * (1.0 + np.sqrt(max(r, 0.0))))
    return out


def lambda_k0(p: BlasiusProfile, k0: float = 2.0, samples: int = 4001) -> tuple:
    """``(min, max)`` of ``f f'' / (2 f'^2)`` on ``0 < zeta <= k0``.

    This is ``(x+1) A`` evaluated with ``w = wbar``; the wall limit is 1/4.
    """
    z = np.linspace(0.0, k0, samples)[1:]
    f, fp, fpp, _ = eval_blasius(p, z)
    v = f * fpp / (2.0 * fp * fp)
    return float(min(v.min(), 0.25)), float(max(v.max(), 0.25))


def scheme_error(p: BlasiusProfile, w: WField, dx: float | None = None) -> float:
    """Local truncation of the scheme on the exact field at ``w.x``.

    ``sup |(wbar(x) - wbar(x - dx))/dx - sqrt(wbar(x)) D2 wbar(x)|`` over
    interior nodes, in units of ``d_x w``.
    """
    dx = float(dx if dx is not None else w.meta.get("dx", 0.0))
    if dx <= 0.0 or w.x <= 0.0:
        raise ValueError("scheme error needs a positive station and step")
    dx = min(dx, w.x)
    psi = w.psi
    now = wbar(p, w.x, psi)[0]
    dxw = (now - wbar(p, w.x - dx, psi)[0]) / dx
    r = dxw - np.sqrt(now) * second_difference(psi, now)
    return float(np.nanmax(np.abs(r[1:-1])))


def main_residual(w: WField, p: BlasiusProfile) -> dict:
    """Sup-norm residual of ``d_x phi - sqrt(w) d_psi^2 phi + A phi``.

    ``d_x w`` is the scheme's backward difference stored on the checkpoint,
    ``d_psi^2 w`` the three-point difference, and the ``wbar`` parts and
    ``A`` are closed forms.
    """
    if "dwdx" not in w.meta or w.x == 0.0:
        raise ValueError("field carries no step difference")
    t = wbar_terms(p, w.x, w.psi)
    ph = w.values - t["w"]
    dx_phi = w.meta["dwdx"] - t["dx"]
    d2_phi = second_difference(w.psi, w.values) - t["dpsi2"]
    r = dx_phi - np.sqrt(w.values) * d2_phi + damping_A(w, p) * ph
    res = float(np.nanmax(np.abs(r[1:-1])))
    err = scheme_error(p, w)
    return {"x": w.x, "residual": res, "scheme_error": err, "ratio": res / err if err > 0 else np.inf,
            "passed": bool(res <= 10.0 * err)}


def _dxw(w: WField) -> np.ndarray:
    # PDE identity d_x w = sqrt(w) d_psi^2 w; zero at both pinned ends
    out = np.sqrt(np.maximum(w.values, 0.0)) * second_difference(w.psi, w.values)
    out[0] = out[-1] = 0.0
    return out


def station_fields(w: WField, p: BlasiusProfile, reference: WField | None = None) -> dict:
    """Station-local fields: ``phi, dx_w, dx_phi, dpsi_phi, dpsi2_phi, dpsix_w``.

    Second differences are NaN at the two end nodes.
    """
    _check_reference(w, reference)
    psi = w.psi
    dxw = _dxw(w)
    d2 = second_difference(psi, w.values)
    d1 = first_difference(psi, w.values)
    if reference is None:
        t = wbar_terms(p, w.x, psi)
        base, b_dx, b_d1, b_d2 = t["w"], t["dx"], t["dpsi"], t["dpsi2"]
    else:
        base = reference.values
        b_dx = _dxw(reference)
        b_d1 = first_difference(psi, base)
        b_d2 = second_difference(psi, base)
    return {
        "phi": w.values - base,
        "dx_w": dxw,
        "dx_phi": dxw - b_dx,
        "dpsi_phi": d1 - b_d1,
        "dpsi2_phi": d2 - b_d2,
        "dpsix_w": first_difference(psi, dxw),
    }


def derivative_fields(t: Trajectory, k: int, p: BlasiusProfile, reference: Trajectory | None = None) -> dict:
    """Derivative fields at checkpoint ``k`` plus ``dx2_w``.

    ``dx2_w`` is the central difference of the identity-based ``d_x w``
    across the neighbouring checkpoints (backward at the last one). The
    identity-based ``d_x w`` is cross-checked against the scheme's step
    difference; ``flag`` is set when they differ by more than 10x the local
    scheme error.
    """
    n = len(t)
    if not 0 < k < n:
        raise ValueError("checkpoint needs a left neighbour for x-differencing")
    w = t[k]
    ref = reference[k] if reference is not None else None
    out = station_fields(w, p, ref)
    lo = k - 1
    hi = k + 1 if k + 1 < n else k
    left = _dxw(t[lo])
    right = _dxw(t[hi]) if hi != k else out["dx_w"]
    out["dx2_w"] = (right - left) / (t[hi].x - t[lo].x)
    out["one_sided"] = hi == k
    if "dwdx" in w.meta:
        mismatch = float(np.max(np.abs(out["dx_w"][1:-1] - w.meta["dwdx"][1:-1])))
        err = scheme_error(p, w)
        out["identity_mismatch"] = mismatch
        out["flag"] = bool(mismatch > 10.0 * err)
    else:
        out["identity_mismatch"] = float("nan")
        out["flag"] = False
    cd = (t[hi].values - t[lo].values) / (t[hi].x - t[lo].x)
    out["checkpoint_mismatch"] = float(np.max(np.abs(cd - out["dx_w"])))
    return out


def _sup(v):
    v = np.abs(np.asarray(v))
    return float(np.nanmax(v[1:-1])) if v.size > 2 else float(np.nanmax(v))


def quantity_series(t: Trajectory, quantity: str, p: BlasiusProfile,
                    reference: Trajectory | None = None) -> tuple:
    """``(x, sup_psi |q|)`` over checkpoints 1..end (interior nodes)."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")
    xs, vals = [], []
    for k in range(1, len(t)):
        if quantity == "dx2_w":
            q = derivative_fields(t, k, p, reference)["dx2_w"]
        else:
            q = station_fields(t[k], p, reference[k] if reference is not None else None)[quantity]
        xs.append(t[k].x)
        vals.append(_sup(q))
    return np.array(xs), np.array(vals)


def sup_norm_decay(t: Trajectory, quantity: str, p: BlasiusProfile, with_log: bool = False,
                   reference: Trajectory | None = None, x_lo: float = 10.0,
                   x_hi: float | None = None, series=None) -> DecayFit:
    """Least-squares power law for ``sup_psi |q|`` against ``x + 1``.

    The window starts at ``max(10, x_lo)`` and stops before the first value
    under 1e-12.
    """
    x, v = series if series is not None else quantity_series(t, quantity, p, reference)
    lo = max(10.0, x_lo)
    hi = x[-1] if x_hi is None else x_hi
    sel = (x >= lo - 1e-9) & (x <= hi + 1e-9)
    floor = np.flatnonzero(sel & (v < 1e-12))
    if floor.size:
        sel &= np.arange(x.size) < floor[0]
    if not sel.any():
        raise ValueError("empty fit window")
    if sel.sum() < 8:
        raise ValueError(f"fit window holds {int(sel.sum())} checkpoints; need at least 8")
    xs, vs = x[sel], v[sel]
    lx = np.log(xs + 1.0)
    ly = np.log(vs) - (np.log(np.log(xs + np.e)) if with_log else 0.0)
    slope, icpt = np.polyfit(lx, ly, 1)
    rms = float(np.sqrt(np.mean((ly - (slope * lx + icpt)) ** 2)))
    return DecayFit(quantity=quantity, exponent=float(-slope), amplitude=float(np.exp(icpt)),
                    with_log=with_log, rms=rms, window=(float(xs[0]), float(xs[-1])), x=xs, values=vs)


def bounded_series(x, v, onset: float = 10.0, slack: float = 1.1, max_onset: float | None = 100.0) -> dict:
    """Boundedness screen for a scaled series ``v(x)``.

    Passes when the maximum over the last decade of ``x + 1`` is at most
    ``slack`` times the median over the window ``x >= onset``. With
    ``max_onset`` set, later onsets up to that value are tried and the
    first passing one is reported.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    last = (x + 1.0) >= (x[-1] + 1.0) / 10.0
    candidates = [onset] if max_onset is None else [xx for xx in x if onset <= xx <= max_onset] or [onset]
    result = None
    for x0 in candidates:
        win = x >= x0 - 1e-9
        med = float(np.median(v[win]))
        top = float(np.max(v[last & win]))
        result = {"onset": float(x0), "last_decade_max": top, "window_median": med,
                  "ratio": top / med if med > 0 else np.inf, "passed": bool(top <= slack * med)}
        if result["passed"]:
            break
    return result


def fit_gaussian_tail(s, q, x: float, min_nodes: int = 10) -> TailFit:
    """Fit ``-ln|q|`` against ``s`` on the tail band ``1e-12 <= |q| <= 0.1 sup|q|``.

    The band is taken beyond the location of ``sup|q|``.
    """
    s = np.asarray(s, dtype=float)
    a = np.abs(np.asarray(q, dtype=float))
    ok = np.isfinite(a)
    top = np.nanmax(a)
    beyond = s > s[np.nanargmax(a)]
    band = ok & beyond & (a >= 1e-12) & (a <= 0.1 * top)
    if band.sum() < min_nodes:
        raise ValueError(f"tail region has {int(band.sum())} nodes; need at least {min_nodes}")
    ss, ll = s[band], -np.log(a[band])
    c, c0 = np.polyfit(ss, ll, 1)
    rms = float(np.sqrt(np.mean((ll - (c * ss + c0)) ** 2)))
    return TailFit(c=float(c), window=(float(ss[0] ** 0.5), float(ss[-1] ** 0.5)), rms=rms,
                   nodes=int(band.sum()), x=float(x))


def gaussian_tail(w: WField, p: BlasiusProfile, quantity: str = "phi",
                  reference: WField | None = None, h_frac: float = 0.8) -> TailFit:
    """Gaussian tail constant ``c`` in ``|q| ~ exp(-c psi**2/(x+1))``.

    Nodes beyond ``h_frac`` of the truncated range are dropped: the
    Dirichlet row at ``psi_max`` pins the perturbation there.
    """
    if w.x < 10.0:
        raise ValueError("tail fits need x >= 10")
    if quantity not in QUANTITIES[:-1] and quantity != "dx_w":
        raise ValueError(f"unsupported tail quantity {quantity!r}")
    q = station_fields(w, p, reference)[quantity]
    k = w.x + 1.0
    h = w.psi / np.sqrt(k)
    keep = h <= h_frac * h[-1]
    return fit_gaussian_tail((h * h)[keep], q[keep], w.x)


def comparison_ratio(t: Trajectory, p: BlasiusProfile, tol: float = 0.05) -> dict:
    """Per-checkpoint ``min/max w/wbar`` with wall limits from one-sided slopes."""
    xs, lo, hi = [], [], []
    for c in t:
        wb = wbar(p, c.x, c.psi)[0]
        r = c.values[1:-1] / wb[1:-1]
        wall = c.wall_slope() / (2.0 * p.b0 / np.sqrt(c.x + 1.0))
        r = np.append(r, wall)
        xs.append(c.x)
        lo.append(float(r.min()))
        hi.append(float(r.max()))
    lo, hi = np.array(lo), np.array(hi)
    c0, C0 = lo[0], hi[0]
    run_lo = np.maximum.accumulate(lo)
    run_hi = np.minimum.accumulate(hi)
    return {
        "x": np.array(xs),
        "c_min": lo,
        "C_max": hi,
        "initial": (float(c0), float(C0)),
        "within_bracket": bool(np.all(lo >= c0 * (1 - tol)) and np.all(hi <= C0 * (1 + tol))),
        "contracting": bool(np.all(lo >= run_lo * (1 - tol)) and np.all(hi <= run_hi * (1 + tol))),
    }


def dpsi_w_comparison(t: Trajectory, p: BlasiusProfile, h1: float = 2.0) -> dict:
    """First checkpoint ``x1`` after which ``d_psi w / d_psi wbar`` stays in [1/2, 3/2] on ``h <= h1``."""
    xs, lo, hi = [], [], []
    for c in t:
        k = c.x + 1.0
        sel = c.psi / np.sqrt(k) <= h1
        r = first_difference(c.psi, c.values)[sel] / wbar(p, c.x, c.psi[sel])[1]
        xs.append(c.x)
        lo.append(float(r.min()))
        hi.append(float(r.max()))
    lo, hi = np.array(lo), np.array(hi)
    ok = (lo >= 0.5) & (hi <= 1.5)
    x1 = None
    for k in range(len(xs)):
        if ok[k:].all():
            x1 = xs[k]
            break
    return {"x": np.array(xs), "ratio_min": lo, "ratio_max": hi, "x1": x1,
            "reached": x1 is not None, "h1": h1}


def _psi_of_y(w: WField, y):
    """Exact inverse of the per-cell (linear ``w``) map ``psi -> y``."""
    ycum = y_image(w)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0) or np.any(y > ycum[-1]):
        raise ValueError(f"y sample beyond the grid image; max covered y = {ycum[-1]:.6g}")
    psi = w.psi
    k = np.clip(np.searchsorted(ycum, y, side="right") - 1, 0, psi.size - 2)
    wk, wk1 = w.values[k], w.values[k + 1]
    m = (wk1 - wk) / (psi[k + 1] - psi[k])
    dy = y - ycum[k]
    root = np.sqrt(wk) + 0.5 * m * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(np.abs(m) > 1e-14, (root * root - wk) / m, dy * np.sqrt(wk))
    s = np.clip(s, 0.0, psi[k + 1] - psi[k])
    return psi[k] + s, k, np.sqrt(np.maximum(wk + m * s, 0.0))


def _interp(psi, v, q):
    v = np.where(np.isfinite(v), v, 0.0)
    return np.interp(q, psi, v)


def euler_reconstruct(w: WField, p: BlasiusProfile, y_samples, reference: WField | None = None) -> dict:
    """Euler-coordinate quantities at heights ``y_samples``.

    ``u = sqrt(w(psi(y)))``, ``d_y u = d_psi w / 2``, ``d_y^2 u = d_x w / 2``,
    ``d_x u = (d_x w + d_psi w * d_x psi) / (2 sqrt(w))`` with
    ``d_x psi = sqrt(w)/2 * int_0^psi w**-1.5 d_x w``, and
    ``d_xy u = (d_psix w + d_x psi * d_x w / sqrt(w)) / 2``. The comparison
    profile is ``f'(y/sqrt(x+1))`` or the reconstruction of ``reference``.
    """
    y = np.atleast_1d(np.asarray(y_samples, dtype=float))
    psi_y, _, u = _psi_of_y(w, y)
    nodes = w.psi
    dpsi = first_difference(nodes, w.values)
    dxw = _dxw(w)
    dpsix = first_difference(nodes, dxw)
    # int_0^psi w^-1.5 d_x w dpsi = int_0^y (d_x w / w) dy, ratio averaged per cell
    ycum = y_image(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w.values > 0.0, dxw / w.values, 0.0)
    ratio[0] = ratio[1]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (ratio[:-1] + ratio[1:]) * np.diff(ycum))])
    integral = np.interp(y, ycum, cum)
    dx_psi = 0.5 * u * integral
    dxw_y = _interp(nodes, dxw, psi_y)
    dpsi_y = _interp(nodes, dpsi, psi_y)
    with np.errstate(divide="ignore", invalid="ignore"):
        dxu = np.where(u > 0.0, (dxw_y + dpsi_y * dx_psi) / (2.0 * u), 0.0)
        dxyu = 0.5 * (_interp(nodes, dpsix, psi_y) + np.where(u > 0.0, dx_psi * dxw_y / u, 0.0))
    if reference is None:
        sk = np.sqrt(w.x + 1.0)
        _, fp, fpp, _ = eval_blasius(p, y / sk)
        ubar, dyubar = np.asarray(fp), np.asarray(fpp) / sk
    else:
        _check_reference(w, reference)
        rpsi, _, ubar = _psi_of_y(reference, y)
        dyubar = 0.5 * _interp(nodes, first_difference(nodes, reference.values), rpsi)
    return {
        "y": y,
        "psi": psi_y,
        "u": u,
        "u_minus_ubar": u - ubar,
        "dy_u_minus_ubar": 0.5 * dpsi_y - dyubar,
        "dyy_u": 0.5 * dxw_y,
        "dx_u": dxu,
        "dxy_u": dxyu,
        "dx_psi": dx_psi,
    }


def y_discrepancy(w: WField, p: BlasiusProfile, reference: WField | None = None) -> dict:
    """``y(psi)`` and ``ybar(psi)`` at the nodes.

    ``ybar = sqrt(x+1) * zeta(h)`` in closed form, or the image under the
    reference field.
    """
    y = y_image(w)
    if reference is None:
        ybar = np.sqrt(w.x + 1.0) * wbar_terms(p, w.x, w.psi)["zeta"]
    else:
        _check_reference(w, reference)
        ybar = y_image(reference)
    return {"psi": w.psi, "y": y, "ybar": ybar, "gap": np.abs(ybar - y)}


def y_envelope(t: Trajectory, p: BlasiusProfile, reference: Trajectory | None = None,
               fit_index: int | None = None, h_frac: float = 0.8) -> dict:
    """Smallest ``(a, b, d) >= 0`` (minimizing ``a + b + d``) with
    ``|ybar - y| <= a + b ln(x+1) + d y / sqrt(x+1)`` at the fit checkpoint,
    then the slack ``min(envelope - gap)`` at every later checkpoint.
    """
    if fit_index is None:
        fit_index = next(i for i, c in enumerate(t) if c.x > 0.0)

    def gap(k):
        c = t[k]
        d = y_discrepancy(c, p, reference[k] if reference is not None else None)
        keep = c.psi / np.sqrt(c.x + 1.0) <= h_frac * c.psi[-1] / np.sqrt(c.x + 1.0)
        return c.x, d["y"][keep], d["gap"][keep]

    x1, y1, g1 = gap(fit_index)
    s1 = y1 / np.sqrt(x1 + 1.0)
    A = -np.column_stack([np.ones_like(s1), np.full_like(s1, np.log(x1 + 1.0)), s1])
    res = linprog(c=[1.0, 1.0, 1.0], A_ub=A, b_ub=-g1, bounds=[(0, None)] * 3, method="highs")
    if not res.success:
        raise RuntimeError(f"envelope fit failed: {res.message}")
    a, b, d = (float(v) for v in res.x)
    xs, slack = [], []
    for k in range(fit_index + 1, len(t)):
        x, y, g = gap(k)
        env = a + b * np.log(x + 1.0) + d * y / np.sqrt(x + 1.0)
        xs.append(x)
        slack.append(float(np.min(env - g)))
    slack = np.array(slack)
    return {"a": a, "b": b, "d": d, "fit_x": x1, "x": np.array(xs), "slack": slack,
            "dominates": bool(np.all(slack >= -1e-12))}


def near_wall_exponent(w: WField, h_max: float = 0.05) -> float:
    """Log-log slope of ``|d_x w|`` against ``psi`` on ``0 < h <= h_max``."""
    h = w.psi / np.sqrt(w.x + 1.0)
    q = np.abs(_dxw(w))
    sel = (h > 0) & (h <= h_max) & (q > 0)
    sel[-1] = False
    if sel.sum() < 3:
        warnings.warn("too few near-wall nodes for an exponent", RuntimeWarning, stacklevel=2)
        return float("nan")
    return float(np.polyfit(np.log(w.psi[sel]), np.log(q[sel]), 1)[0])


def write_fit(fit: DecayFit, out_dir, stem: str | None = None) -> tuple:
    """``<stem>.csv`` with (x, value, model) rows and ``<stem>.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or f"fit_{fit.quantity}{'_log' if fit.with_log else ''}"
    csv_path = out / f"{stem}.csv"
    with csv_path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "value", "model"])
        for xx, vv, mm in zip(fit.x, fit.values, fit.model(fit.x)):
            wr.writerow([repr(float(xx)), repr(float(vv)), repr(float(mm))])
    json_path = out / f"{stem}.json"
    json_path.write_text(json.dumps(fit.record(), indent=2, sort_keys=True))
    return csv_path, json_path


def tail_record(fit: TailFit) -> dict:
    return asdict(fit)
