"""Von Mises coordinates ``(x, psi)`` with ``psi = int_0^y u dy'`` and
``w = u**2``, and the exact Blasius field ``wbar = f'(zeta)**2`` in them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import BPoly

from .blasius import BlasiusProfile, bracketing_threshold, eval_blasius, invert_f
from .fields import PsiGrid, WField

__all__ = [
    "SimilarityPoint",
    "wbar",
    "wbar_terms",
    "wbar_field",
    "y_of_psi",
    "y_image",
    "similarity_coords",
    "w0_from_u0",
    "InitialData",
    "blasius_u0",
    "gaussian_concave_u0",
    "wall_ratio_bounds",
]


@dataclass(frozen=True)
class SimilarityPoint:
    x: float
    psi: float
    h: float
    zeta: float
    y_bar: float


def wbar(p: BlasiusProfile, x, psi):
    """Return ``(wbar, d_psi wbar, d_x wbar)`` at ``(x, psi)``.

    ``wbar = f'^2``, ``d_psi wbar = 2 f''/sqrt(x+1)``,
    ``d_x wbar = -f f''/(x+1)`` with ``f(zeta) = psi/sqrt(x+1)``.
    """
    t = wbar_terms(p, x, psi)
    return t["w"], t["dpsi"], t["dx"]


def wbar_terms(p: BlasiusProfile, x, psi) -> dict:
    """Profile values and closed-form derivatives of ``wbar`` at ``(x, psi)``.

    Keys: ``h, zeta, f, fp, fpp, fppp, w, dpsi, dx, dpsi2``. ``dpsi2`` is
    ``-f f''/((x+1) f')`` with its wall limit 0.
    """
    if np.any(np.asarray(x) < 0.0) or np.any(np.asarray(psi) < 0.0):
        raise ValueError("x and psi must be nonnegative")
    k = np.asarray(x, dtype=float) + 1.0
    sk = np.sqrt(k)
    h = np.asarray(psi, dtype=float) / sk
    zeta = invert_f(p, h)
    f, fp, fpp, fppp = eval_blasius(p, zeta)
    f, fp, fpp, fppp = map(np.asarray, (f, fp, fpp, fppp))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(fp > 0.0, f / fp, 0.0)
    return {
        "h": h,
        "zeta": np.asarray(zeta),
        "f": f,
        "fp": fp,
        "fpp": fpp,
        "fppp": fppp,
        "w": fp * fp,
        "dpsi": 2.0 * fpp / sk,
        "dx": -f * fpp / k,
        "dpsi2": -ratio * fpp / k,
    }


def wbar_field(p: BlasiusProfile, grid: PsiGrid, x: float) -> WField:
    """The exact Blasius field sampled on ``grid`` at station ``x``."""
    t = wbar_terms(p, x, grid.nodes)
    return WField(x=float(x), grid=grid, values=t["w"], meta={"dwdx": t["dx"], "exact": True})


def _cell_integrals(psi: np.ndarray, w: np.ndarray) -> np.ndarray:
    # exact integral of 1/sqrt(w) for w linear on each cell; at the wall this
    # is the closed form 2*sqrt(dpsi / slope)
    sw = np.sqrt(w)
    return 2.0 * np.diff(psi) / (sw[:-1] + sw[1:])


def y_image(w: WField) -> np.ndarray:
    """``y(psi_j) = int_0^psi_j dpsi / sqrt(w)`` at every node."""
    v = w.values
    if np.any(v[1:] <= 0.0):
        j = int(np.flatnonzero(v[1:] <= 0.0)[0]) + 1
        raise ValueError(f"w <= 0 at interior node {j} (psi={w.psi[j]:.6g}); positivity violated")
    out = np.zeros(v.size)
    out[1:] = np.cumsum(_cell_integrals(w.psi, v))
    return out


def y_of_psi(w: WField, psi):
    """Height ``y(psi; u)`` for a field; ``psi`` may fall between nodes."""
    q = np.asarray(psi, dtype=float)
    nodes = w.psi
    if np.any(q < 0.0) or np.any(q > nodes[-1]):
        raise ValueError("psi outside the grid")
    ycum = y_image(w)
    k = np.clip(np.searchsorted(nodes, q, side="right") - 1, 0, nodes.size - 2)
    pa = nodes[k]
    wa, wb = w.values[k], w.values[k + 1]
    wq = wa + (wb - wa) * (q - pa) / (nodes[k + 1] - pa)
    with np.errstate(divide="ignore", invalid="ignore"):
        part = 2.0 * (q - pa) / (np.sqrt(wa) + np.sqrt(np.maximum(wq, 0.0)))
    part = np.where(q == pa, 0.0, part)
    out = ycum[k] + part
    return float(out) if q.ndim == 0 else out


def similarity_coords(p: BlasiusProfile, x: float, psi: float) -> SimilarityPoint:
    sk = np.sqrt(x + 1.0)
    h = psi / sk
    zeta = invert_f(p, h)
    return SimilarityPoint(x=float(x), psi=float(psi), h=float(h), zeta=float(zeta), y_bar=float(sk * zeta))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def _gauss(u0, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[..., None] + half[..., None] * _GL_X
    vals = np.asarray(u0(pts.ravel()), dtype=float).reshape(pts.shape)
    return half * (vals @ _GL_W)


def _adaptive_cells(u0, edges, tol=1e-15, max_depth=10):
    """Composite Gauss-Legendre with per-cell bisection until halves agree."""
    done_a, done_b, done_v = [], [], []
    a, b = edges[:-1], edges[1:]
    for _ in range(max_depth):
        whole = _gauss(u0, a, b)
        m = 0.5 * (a + b)
        split = _gauss(u0, a, m) + _gauss(u0, m, b)
        ok = np.abs(whole - split) <= tol * np.maximum(1.0, np.abs(split))
        done_a.append(a[ok])
        done_b.append(b[ok])
        done_v.append(split[ok])
        if ok.all():
            break
        a, b = np.concatenate([a[~ok], m[~ok]]), np.concatenate([m[~ok], b[~ok]])
    else:
        done_a.append(a)
        done_b.append(b)
        done_v.append(_gauss(u0, a, 0.5 * (a + b)) + _gauss(u0, 0.5 * (a + b), b))
    a = np.concatenate(done_a)
    b = np.concatenate(done_b)
    v = np.concatenate(done_v)
    order = np.argsort(a)
    return a[order], b[order], v[order]


def _wall_slope(u0, delta=1e-4):
    return float((4.0 * u0(np.array([delta]))[0] - u0(np.array([2 * delta]))[0]) / (2.0 * delta))


def w0_from_u0(u0, grid: PsiGrid, slope: float | None = None, cell: float = 0.05) -> WField:
    """Map initial data ``u0(y)`` to ``w0(psi_j) = u0(y(psi_j))**2`` at ``x = 0``.

    ``psi(y) = int_0^y u0`` is tabulated by adaptive Gauss-Legendre
    quadrature and inverted by safeguarded Newton iteration. ``u0`` must
    accept and return numpy arrays.
    """
    u0_at0 = float(np.asarray(u0(np.array([0.0])))[0])
    if abs(u0_at0) > 1e-12:
        raise ValueError(f"u0(0) must vanish, got {u0_at0:.3e}")
    b = _wall_slope(u0) if slope is None else float(slope)
    if b <= 0.0:
        raise ValueError("u0'(0) must be positive")

    # tabulation range: until u0 is 1 to rounding, or psi_max is covered
    y_end = 8.0
    while True:
        probe = np.linspace(0.5 * y_end, y_end, 64)
        vals = np.asarray(u0(probe), dtype=float)
        if np.any(vals <= 0.0):
            raise ValueError("u0 must be positive for y > 0")
        if np.all(np.abs(vals - 1.0) < 1e-15) or y_end > grid.psi_max + 64.0:
            break
        y_end *= 2.0
    n_cells = int(np.ceil(y_end / cell))
    edges = np.linspace(0.0, y_end, n_cells + 1)
    sample = np.asarray(u0(np.linspace(0.0, y_end, 8 * n_cells + 1)[1:]), dtype=float)
    if np.any(sample <= 0.0):
        raise ValueError("u0 must be positive for y > 0")
    a, bb, v = _adaptive_cells(u0, edges)
    knots = np.concatenate([[0.0], bb])
    cum = np.concatenate([[0.0], np.cumsum(v)])

    psi = grid.nodes
    y = np.empty_like(psi)
    beyond = psi >= cum[-1]
    # u0 == 1 to rounding past the table
    y[beyond] = knots[-1] + (psi[beyond] - cum[-1])
    q = psi[~beyond]
    k = np.clip(np.searchsorted(cum, q, side="right") - 1, 0, cum.size - 2)
    lo, hi = knots[k].copy(), knots[k + 1].copy()
    frac = (q - cum[k]) / (cum[k + 1] - cum[k])
    yy = lo + frac * (hi - lo)
    first = k == 0
    yy[first] = np.minimum(np.sqrt(2.0 * q[first] / b), hi[first])
    base = knots[k]
    for _ in range(60):
        r = cum[k] + _gauss(u0, base, yy) - q
        lo = np.where(r < 0.0, yy, lo)
        hi = np.where(r > 0.0, yy, hi)
        d = np.asarray(u0(yy), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            yn = yy - r / d
        bad = ~((yn > lo) & (yn < hi)) | ~np.isfinite(yn)
        yn = np.where(bad, 0.5 * (lo + hi), yn)
        if np.all(np.abs(yn - yy) <= 1e-14 * np.maximum(1.0, yy)):
            yy = yn
            break
        yy = yn
    y[~beyond] = np.where(q == 0.0, 0.0, yy)
    w = np.asarray(u0(y), dtype=float) ** 2
    w[0] = 0.0
    return WField(x=0.0, grid=grid, values=w, meta={"y": y, "u0_slope": b})


@dataclass(frozen=True)
class InitialData:
    """Initial velocity ``u0(y)`` with its first two derivatives (vectorized)."""

    name: str
    u0: Callable
    du0: Callable
    d2u0: Callable
    params: dict

    def __call__(self, y):
        return self.u0(y)


def blasius_u0(p: BlasiusProfile, x0: float = 1.0) -> InitialData:
    """Blasius velocity ``f'(y/sqrt(x0))`` as initial data (origin shift ``x0``)."""
    if not x0 > 0.0:
        raise ValueError("x0 must be positive")
    s = np.sqrt(x0)

    def part(k):
        return lambda y: np.asarray(eval_blasius(p, np.asarray(y, dtype=float) / s)[k]) / s ** (k - 1)

    return InitialData("blasius-shift", part(1), part(2), part(3), {"x0": float(x0)})


def gaussian_concave_u0(amplitude: float = 0.5, width: float = 1.0, y_max: float = 40.0,
                        h: float = 0.01) -> InitialData:
    """Concave data with ``u0' = b * exp(-amplitude * y**4 / (y**2 + width**2))``.

    ``b`` normalizes ``u0(inf) = 1``. ``u0'' = O(y**3)`` at the wall and
    ``1 - u0`` decays like ``exp(-amplitude * y**2)``. ``u0`` is tabulated by
    Gauss-Legendre quadrature and interpolated by quintic Hermite pieces built
    from exact first and second derivatives.
    """
    if not (amplitude > 0.0 and width > 0.0):
        raise ValueError("amplitude and width must be positive")
    a, s2 = float(amplitude), float(width) ** 2

    def g(y):
        y = np.asarray(y, dtype=float)
        return np.exp(-a * y**4 / (y * y + s2))

    def dg(y):
        y = np.asarray(y, dtype=float)
        q = y * y + s2
        return g(y) * (-a * (2.0 * y**5 + 4.0 * s2 * y**3) / (q * q))

    knots = np.arange(0.0, y_max + 0.5 * h, h)
    cum = np.concatenate([[0.0], np.cumsum(_gauss(g, knots[:-1], knots[1:]))])
    b = 1.0 / cum[-1]
    table = np.column_stack([b * cum, b * g(knots), b * dg(knots)])
    poly = BPoly.from_derivatives(knots, table.tolist())

    def u0(y):
        y = np.asarray(y, dtype=float)
        return np.where(y < y_max, poly(np.minimum(y, y_max)), 1.0)

    def du0(y):
        return b * g(y)

    def d2u0(y):
        return b * dg(y)

    return InitialData("gaussian-concave", u0, du0, d2u0,
                       {"amplitude": a, "width": float(width), "slope": b})


def wall_ratio_bounds(p: BlasiusProfile, a: float = 1.0):
    """Bounds ``c_a <= wbar/h <= C_a`` on ``0 < h <= a`` from the profile."""
    h = np.linspace(0.0, a, 2001)[1:]
    z = invert_f(p, h)
    r = eval_blasius(p, z)[1] ** 2 / h
    return float(r.min()), float(r.max())


def zeta_bracketing_threshold(p: BlasiusProfile) -> float:
    """Smallest ``M`` after which ``zeta/2 <= f(zeta) <= 2 zeta`` holds."""
    return bracketing_threshold(p)
