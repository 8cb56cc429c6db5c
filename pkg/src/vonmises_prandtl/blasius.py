"""Blasius similarity profile.

Solves ``f''' + f f''/2 = 0`` with ``f(0) = f'(0) = 0`` and ``f'(inf) = 1`` by
bisection shooting on ``s = f''(0)``, tabulates ``f, f', f'', f'''`` and
provides interpolation, inversion of ``f`` and the Gaussian tail constants.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import special
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "BlasiusError",
    "BlasiusProfile",
    "solve_blasius",
    "eval_blasius",
    "invert_f",
    "check_origin_derivatives",
    "fit_tail_constants",
    "ode_residual",
    "bracketing_threshold",
    "write_profile",
    "read_profile",
]

SHOOT_BRACKET = (0.2, 0.5)
DEFAULT_ZETA_MAX = 12.0
TABLE_STEP = 0.005


class BlasiusError(RuntimeError):
    """Shooting failed to bracket or to converge."""


def _rk4_endpoint(s: float, zeta_max: float, n: int) -> float:
    """Return f'(zeta_max) for initial curvature ``s`` using ``n`` RK4 steps."""
    h = zeta_max / n
    h2 = 0.5 * h
    h6 = h / 6.0
    f, fp, fpp = 0.0, 0.0, s
    for _ in range(n):
        k1a, k1b, k1c = fp, fpp, -0.5 * f * fpp
        fa, fb, fc = f + h2 * k1a, fp + h2 * k1b, fpp + h2 * k1c
        k2a, k2b, k2c = fb, fc, -0.5 * fa * fc
        fa, fb, fc = f + h2 * k2a, fp + h2 * k2b, fpp + h2 * k2c
        k3a, k3b, k3c = fb, fc, -0.5 * fa * fc
        fa, fb, fc = f + h * k3a, fp + h * k3b, fpp + h * k3c
        k4a, k4b, k4c = fb, fc, -0.5 * fa * fc
        f += h6 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        fp += h6 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        fpp += h6 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
    return fp


def _rk4_table(s: float, zeta_max: float, n: int):
    h = zeta_max / n
    h2 = 0.5 * h
    h6 = h / 6.0
    rows = [(0.0, 0.0, s)]
    f, fp, fpp = 0.0, 0.0, s
    for _ in range(n):
        k1a, k1b, k1c = fp, fpp, -0.5 * f * fpp
        fa, fb, fc = f + h2 * k1a, fp + h2 * k1b, fpp + h2 * k1c
        k2a, k2b, k2c = fb, fc, -0.5 * fa * fc
        fa, fb, fc = f + h2 * k2a, fp + h2 * k2b, fpp + h2 * k2c
        k3a, k3b, k3c = fb, fc, -0.5 * fa * fc
        fa, fb, fc = f + h * k3a, fp + h * k3b, fpp + h * k3c
        k4a, k4b, k4c = fb, fc, -0.5 * fa * fc
        f += h6 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        fp += h6 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        fpp += h6 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
        rows.append((f, fp, fpp))
    return np.linspace(0.0, zeta_max, n + 1), np.array(rows)


def _bisect(zeta_max: float, n: int, tol: float, max_iter: int = 200) -> float:
    lo, hi = SHOOT_BRACKET
    g_lo = _rk4_endpoint(lo, zeta_max, n) - 1.0
    g_hi = _rk4_endpoint(hi, zeta_max, n) - 1.0
    if g_lo * g_hi > 0.0:
        raise BlasiusError(
            f"shooting bracket {SHOOT_BRACKET} does not straddle f'(zeta_max)=1: "
            f"residuals {g_lo:.3e}, {g_hi:.3e}"
        )
    for _ in range(max_iter):
        if hi - lo <= 0.1 * tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        g_mid = _rk4_endpoint(mid, zeta_max, n) - 1.0
        if g_mid * g_lo > 0.0:
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    raise BlasiusError(f"bisection did not converge; last bracket [{lo!r}, {hi!r}]")


@dataclass(frozen=True)
class BlasiusProfile:
    """Tabulated Blasius profile. Immutable once built."""

    zeta_grid: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    fppp: np.ndarray
    b0: float
    beta_bar: float
    tol: float
    zeta_max: float
    c1_fit: float = math.nan
    c2_fit: float = math.nan
    tail_rms: float = math.nan
    step: float = math.nan
    _splines: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("zeta_grid", "f", "fp", "fpp", "fppp"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_splines", _build_splines(self))

    @property
    def f_max(self) -> float:
        return float(self.f[-1])


def _limited_slopes(x, y, dy):
    """Clip Hermite slopes into the Fritsch-Carlson monotonicity region."""
    d = np.array(dy, dtype=float)
    delta = np.diff(y) / np.diff(x)
    for k in range(delta.size):
        if delta[k] == 0.0:
            d[k] = 0.0
            d[k + 1] = 0.0
            continue
        a = d[k] / delta[k]
        b = d[k + 1] / delta[k]
        if a < 0.0:
            d[k] = 0.0
            a = 0.0
        if b < 0.0:
            d[k + 1] = 0.0
            b = 0.0
        r2 = a * a + b * b
        if r2 > 9.0:
            t = 3.0 / math.sqrt(r2)
            d[k] = t * a * delta[k]
            d[k + 1] = t * b * delta[k]
    return d


def _build_splines(p: BlasiusProfile) -> dict:
    z = p.zeta_grid
    # f'''' from differentiating the ODE: f'''' = -(f' f'' + f f''')/2
    f4 = -0.5 * (p.fp * p.fpp + p.f * p.fppp)
    return {
        "f": CubicHermiteSpline(z, p.f, _limited_slopes(z, p.f, p.fp)),
        "fp": CubicHermiteSpline(z, p.fp, _limited_slopes(z, p.fp, p.fpp)),
        # f'' is decreasing and f''' changes sign nowhere on (0, inf)
        "fpp": CubicHermiteSpline(z, p.fpp, -_limited_slopes(z, -p.fpp, -p.fppp)),
        "fppp": CubicHermiteSpline(z, p.fppp, f4),
    }


def solve_blasius(zeta_max: float = DEFAULT_ZETA_MAX, tol: float = 1e-10) -> BlasiusProfile:
    """Shoot for ``b0 = f''(0)`` and tabulate the profile on ``[0, zeta_max]``.

    The RK4 step is halved until two consecutive shooting constants agree to
    ``tol``. The table is written at the finer of the converged step and
    ``TABLE_STEP``.
    """
    if zeta_max < 8.0:
        raise ValueError("zeta_max must be >= 8")
    if not 0.0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")

    n = int(math.ceil(zeta_max / 0.04))
    b_prev = _bisect(zeta_max, n, tol)
    for _ in range(12):
        n *= 2
        b = _bisect(zeta_max, n, tol)
        if abs(b - b_prev) < tol:
            break
        b_prev = b
    else:
        raise BlasiusError(f"b0 not stable under step halving; last values {b_prev!r}, {b!r}")

    n_table = max(n, int(math.ceil(zeta_max / TABLE_STEP)))
    zeta, y = _rk4_table(b, zeta_max, n_table)
    f, fp, fpp = y[:, 0].copy(), y[:, 1].copy(), y[:, 2].copy()
    f[0] = 0.0
    fp[0] = 0.0
    fppp = -0.5 * f * fpp
    endpoint_err = abs(fp[-1] - 1.0)
    prof = BlasiusProfile(
        zeta_grid=zeta,
        f=f,
        fp=fp,
        fpp=fpp,
        fppp=fppp,
        b0=float(b),
        beta_bar=float(zeta_max - f[-1]),
        tol=max(tol, endpoint_err),
        zeta_max=float(zeta_max),
        step=zeta_max / n_table,
    )
    c1, c2, rms = fit_tail_constants(prof)
    return replace(prof, c1_fit=c1, c2_fit=c2, tail_rms=rms)


def eval_blasius(p: BlasiusProfile, zeta):
    """Return ``(f, f', f'', f''')`` at ``zeta >= 0``.

    Beyond ``zeta_max`` the asymptotic tail is used: ``f`` continues with
    unit slope, ``f'' = f''(zeta_max) exp(-(f^2 - f(zeta_max)^2)/4)`` solves
    ``f''' = -f f''/2`` there, and ``1 - f'`` is the tail integral of ``f''``.
    """
    z = np.asarray(zeta, dtype=float)
    if np.any(z < 0.0):
        raise ValueError("zeta must be nonnegative")
    inside = z <= p.zeta_max
    zi = np.where(inside, z, 0.0)
    sp = p._splines
    fm, fppm = float(p.f[-1]), float(p.fpp[-1])
    ft = fm + np.maximum(z - p.zeta_max, 0.0)
    decay = np.exp(-(ft * ft - fm * fm) / 4.0)
    fpp_t = fppm * decay
    fp_t = 1.0 - fppm * math.sqrt(math.pi) * special.erfcx(ft / 2.0) * decay
    f = np.where(inside, sp["f"](zi), ft)
    fp = np.where(inside, sp["fp"](zi), fp_t)
    fpp = np.where(inside, sp["fpp"](zi), fpp_t)
    fppp = np.where(inside, sp["fppp"](zi), -0.5 * ft * fpp_t)
    if z.ndim == 0:
        return float(f), float(fp), float(fpp), float(fppp)
    return f, fp, fpp, fppp


def invert_f(p: BlasiusProfile, h):
    """Solve ``f(zeta) = h`` for ``zeta``; ``f`` is strictly increasing."""
    hv = np.asarray(h, dtype=float)
    if np.any(hv < 0.0):
        raise ValueError("h must be nonnegative")
    flat = np.atleast_1d(hv).ravel()
    out = np.empty_like(flat)
    tail = flat >= p.f_max
    out[tail] = flat[tail] + p.beta_bar

    hh = flat[~tail]
    if hh.size:
        # bracket on the table, then safeguarded Newton on the f spline
        k = np.clip(np.searchsorted(p.f, hh, side="right") - 1, 0, p.f.size - 2)
        lo = p.zeta_grid[k].copy()
        hi = p.zeta_grid[k + 1].copy()
        z = np.where(k == 0, np.sqrt(2.0 * hh / p.b0), 0.5 * (lo + hi))
        z = np.clip(z, lo, hi)
        spl = p._splines["f"]
        dspl = spl.derivative()
        for _ in range(60):
            r = spl(z) - hh
            lo = np.where(r < 0.0, z, lo)
            hi = np.where(r > 0.0, z, hi)
            d = dspl(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(d > 0.0, r / d, np.inf)
            zn = z - step
            bad = ~((zn > lo) & (zn < hi))
            zn = np.where(bad, 0.5 * (lo + hi), zn)
            if np.all(np.abs(zn - z) <= 1e-15 * np.maximum(1.0, z)):
                z = zn
                break
            z = zn
        out[~tail] = np.where(hh == 0.0, 0.0, z)
    if hv.ndim == 0:
        return float(out[0])
    return out.reshape(hv.shape)


def ode_residual(p: BlasiusProfile) -> np.ndarray:
    """Residual ``f''' + f f''/2`` with ``f'''`` from 5-point differences of ``f''``.

    Independent of the stored ``fppp`` column. Returned on interior nodes
    ``2..n-3``.
    """
    g = p.fpp
    h = p.zeta_grid[1] - p.zeta_grid[0]
    d3 = (g[:-4] - 8.0 * g[1:-3] + 8.0 * g[3:-1] - g[4:]) / (12.0 * h)
    return d3 + 0.5 * p.f[2:-2] * p.fpp[2:-2]


def check_origin_derivatives(p: BlasiusProfile):
    """Estimate ``f'''(0)``, ``f''''(0)`` from one-sided differences of ``f''``.

    ``f^(5)(0)`` uses the closed form ``-b0**2/2`` obtained by evaluating the
    twice-differentiated ODE at the wall.
    """
    g = p.fpp
    h = p.zeta_grid[1] - p.zeta_grid[0]
    f3 = (-25.0 * g[0] + 48.0 * g[1] - 36.0 * g[2] + 16.0 * g[3] - 3.0 * g[4]) / (12.0 * h)
    f4 = (45.0 * g[0] - 154.0 * g[1] + 214.0 * g[2] - 156.0 * g[3] + 61.0 * g[4] - 10.0 * g[5]) / (
        12.0 * h * h
    )
    f5 = -0.5 * p.b0**2
    return float(f3), float(f4), float(f5)


def fit_tail_constants(p: BlasiusProfile, window=(4.0, None)):
    """Least-squares fit ``ln f'' ~ -c1 zeta^2 - c2 zeta + const``.

    Returns ``(c1, c2, rms)``. Nodes with ``f'' < 1e-300`` are dropped.
    """
    if p.zeta_max < 8.0:
        raise ValueError("profile must extend to zeta_max >= 8")
    lo, hi = window
    hi = p.zeta_max if hi is None else hi
    z = p.zeta_grid
    sel = (z >= lo) & (z <= hi) & (p.fpp > 1e-300)
    if np.count_nonzero(sel) < 10:
        raise ValueError("fewer than 10 usable points in the tail window")
    zz = z[sel]
    design = np.column_stack([-zz * zz, -zz, np.ones_like(zz)])
    target = np.log(p.fpp[sel])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    rms = float(np.sqrt(np.mean((design @ coef - target) ** 2)))
    return float(coef[0]), float(coef[1]), rms


def bracketing_threshold(p: BlasiusProfile) -> float:
    """Smallest table value ``M`` with ``1/2 <= f(z)/z <= 2`` for all ``z >= M``.

    Beyond the table ``f(z)/z = 1 - beta_bar/z`` is increasing, so the
    condition persists.
    """
    z = p.zeta_grid[1:]
    ok = (p.f[1:] >= 0.5 * z) & (p.f[1:] <= 2.0 * z)
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return float(z[0])
    return float(z[min(bad[-1] + 1, z.size - 1)])


def write_profile(p: BlasiusProfile, csv_path, json_path=None) -> None:
    """Write the table as CSV (``zeta,f,fp,fpp,fppp``) plus a JSON sidecar."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["zeta", "f", "fp", "fpp", "fppp"])
        for row in zip(p.zeta_grid, p.f, p.fp, p.fpp, p.fppp):
            wr.writerow([repr(float(v)) for v in row])
    json_path = csv_path.with_suffix(".json") if json_path is None else Path(json_path)
    meta = {
        "b0": p.b0,
        "beta_bar": p.beta_bar,
        "c1_fit": p.c1_fit,
        "c2_fit": p.c2_fit,
        "zeta_max": p.zeta_max,
        "tol": p.tol,
    }
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_profile(csv_path, json_path=None) -> BlasiusProfile:
    csv_path = Path(csv_path)
    json_path = csv_path.with_suffix(".json") if json_path is None else Path(json_path)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(json_path.read_text())
    return BlasiusProfile(
        zeta_grid=data[:, 0],
        f=data[:, 1],
        fp=data[:, 2],
        fpp=data[:, 3],
        fppp=data[:, 4],
        b0=meta["b0"],
        beta_bar=meta["beta_bar"],
        tol=meta["tol"],
        zeta_max=meta["zeta_max"],
        c1_fit=meta["c1_fit"],
        c2_fit=meta["c2_fit"],
        step=float(data[1, 0] - data[0, 0]),
    )
