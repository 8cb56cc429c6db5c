"""Piecewise barrier functions in the similarity variable ``h = psi/sqrt(x+1)``
and numerical certification of the inequalities they are built for.

A barrier is a list of pieces, each defined on a half-open band of ``h``
and given by one of a few closed-form families, optionally multiplied by a
time factor ``exp(-B (x+1)**-mu)``. Every family carries its exact
``x``-derivative at fixed ``psi`` and its first two ``psi``-derivatives, so
residuals need no numerical differentiation of the barrier itself.

Certification is sample-based: a positive minimum of the residual over the
sampled nodes is reported together with the sample density.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .blasius import BlasiusProfile, eval_blasius, invert_f
from .diagnostics import _dxw, damping_A, derivative_fields, lambda_k0
from .fields import Trajectory, WField
from .von_mises import wbar_terms

__all__ = [
    "KINDS",
    "BarrierError",
    "Piece",
    "BarrierSpec",
    "build_barrier",
    "algebraic_rate",
    "claimed_regions",
    "certify",
    "default_constants",
    "eval_barrier",
    "barrier_terms",
    "residual_check",
    "ridge_verify",
    "exp_tail_margin",
    "dominance",
    "search_threshold",
    "certificate",
    "write_certificate",
]

KINDS = ("exp-tail", "algebraic", "sharp", "small-h", "dxphi", "d2xw-cos", "d2xw-alg")

# Operator applied to the barrier, per kind. ``A`` is the damping
# coefficient; ``wx`` is d_x w of the marched field.
_OPERATOR = {
    "exp-tail": "L",
    "algebraic": "L+A",
    "sharp": "L+A",
    "small-h": "L+A",
    "dxphi": "L+A-wx/2w",
    "d2xw-cos": "L-3wx/2w",
    "d2xw-alg": "L-3wx/2w",
}


class BarrierError(ValueError):
    """Constants violate a side condition of the barrier family."""


@dataclass(frozen=True)
class Piece:
    """One closed-form piece on the band ``lo <= h < hi``.

    ``formula`` is one of ``zero``, ``power`` (``c K^p psi^q``), ``gauss``
    (``c K^p exp(-eps psi^2/K)``), ``cos`` (``c K^p cos(h - h1)``) or
    ``profile`` (``c K^p G(zeta)`` with ``G`` in ``fpp``, ``fp2``, ``ffpp``).
    """

    lo: float
    hi: float
    formula: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BarrierSpec:
    kind: str
    pieces: tuple
    constants: dict
    ridges: tuple = ()
    time_factor: tuple | None = None  # (B, mu): exp(-B K^-mu)
    operator: str = "L+A"
    profile: BlasiusProfile | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.pieces or self.pieces[0].lo != 0.0 or self.pieces[-1].hi != math.inf:
            raise BarrierError("pieces must cover h in [0, inf)")
        for a, b in zip(self.pieces, self.pieces[1:]):
            if a.hi != b.lo:
                raise BarrierError(f"pieces leave a gap or overlap at h={a.hi}")
        inner = {pc.hi for pc in self.pieces[:-1]}
        if set(self.ridges) - inner:
            raise BarrierError("every ridge must sit on a piece boundary")

    def record(self) -> dict:
        return {
            "kind": self.kind,
            "constants": {k: float(v) for k, v in self.constants.items()},
            "pieces": [{"lo": pc.lo, "hi": pc.hi if math.isfinite(pc.hi) else "inf",
                        "formula": pc.formula,
                        "params": {k: (v if isinstance(v, str) else float(v)) for k, v in pc.params.items()}}
                       for pc in self.pieces],
            "ridges": list(self.ridges),
            "time_factor": list(self.time_factor) if self.time_factor else None,
            "operator": self.operator,
        }


def _need(constants: dict, kind: str, names) -> dict:
    missing = [n for n in names if n not in constants]
    if missing:
        raise BarrierError(f"{kind}: missing constants {missing}")
    return {n: float(constants[n]) for n in names}


def _require(ok: bool, kind: str, condition: str):
    if not ok:
        raise BarrierError(f"{kind}: side condition violated: {condition}")


def default_constants(kind: str, p: BlasiusProfile) -> dict:
    """Starting constants; the large/small ones are meant to be searched."""
    lam = lambda_k0(p)[0]
    table = {
        "exp-tail": {"C": 1.0, "eps": 0.05},
        "algebraic": {"C": 1.0, "M": 4.0, "h0": 4.0},
        "sharp": {"C": 1.0, "alpha": 0.5, "N": 10.0, "B": 1.0, "lam": lam},
        "small-h": {"C": 1.0, "alpha": lam / 2.0, "M": 4.0},
        "dxphi": {"K": 1.0, "eps": 0.1},
        "d2xw-cos": {"h1": 8.0, "eps": 0.1},
        "d2xw-alg": {"alpha": 0.1, "h0": 0.5, "h1": 8.0, "eps": 0.1},
    }
    if kind not in table:
        raise BarrierError(f"unknown barrier kind {kind!r}; expected one of {KINDS}")
    return dict(table[kind])


def algebraic_rate(p: BlasiusProfile, h0: float) -> float:
    """Minimum of ``f f''/(2 f'^2)`` for ``h <= h0``: ``(x+1) A`` on Blasius data."""
    return lambda_k0(p, k0=float(invert_f(p, h0)))[0]


def claimed_regions(spec: BarrierSpec) -> list:
    """Bands of ``h`` where the barrier alone is claimed to satisfy its
    operator inequality. Other bands are covered by a different estimate
    (an earlier decay bound or an added multiple of ``d_psi w``)."""
    c, inf = spec.constants, math.inf
    if spec.kind == "algebraic":
        return [(0.0, 1.0 / c["M"]), (1.0 / c["M"], c["h0"]), (c["h0"], inf)]
    if spec.kind == "sharp":
        return [(0.0, 1.0 / c["N"]), (1.0 / c["N"], inf)]
    if spec.kind == "small-h":
        return [(0.0, 1.0 / c["M"])]
    if spec.kind == "d2xw-cos":
        return [(c["h1"], inf)]
    if spec.kind == "d2xw-alg":
        return [(0.0, c["h0"]), (c["h1"], inf)]
    return [(0.0, inf)]


def build_barrier(kind: str, p: BlasiusProfile, constants: dict | None = None) -> BarrierSpec:
    """Assemble the barrier of the given kind, solving ridge matching conditions."""
    if kind not in KINDS:
        raise BarrierError(f"unknown barrier kind {kind!r}; expected one of {KINDS}")
    c = default_constants(kind, p)
    c.update(constants or {})
    inf = math.inf
    tf = None
    ridges: tuple = ()

    if kind == "exp-tail":
        k = _need(c, kind, ["C", "eps"])
        _require(k["C"] > 0, kind, "C > 0")
        # positivity of the residual for sqrt(w) <= 1.2 needs 4 eps sqrt(w) < 1
        _require(0 < k["eps"] < 1.0 / (4.0 * 1.2), kind, "0 < eps < 1/(4*1.2)")
        pieces = (Piece(0.0, inf, "gauss", {"c": k["C"], "p": 0.0, "eps": k["eps"]}),)

    elif kind == "algebraic":
        _require(c.get("M", 0) > 0 and c.get("h0", 0) > 1.0 / c["M"], kind, "h0 > 1/M > 0")
        if "lam" not in c:
            # (x+1) A must exceed lam on the whole band h <= h0; half the
            # Blasius-data minimum leaves room for w != wbar
            c["lam"] = 0.5 * algebraic_rate(p, float(c["h0"]))
        k = _need(c, kind, ["C", "lam", "M", "h0"])
        _require(0 < k["lam"] < 1, kind, "lam in (0, 1)")
        C, lam, M, h0 = k["C"], k["lam"], k["M"], k["h0"]
        pieces = (
            Piece(0.0, 1.0 / M, "power", {"c": C * math.sqrt(M), "p": -lam - 0.25, "q": 0.5}),
            Piece(1.0 / M, h0, "power", {"c": C, "p": -lam, "q": 0.0}),
            Piece(h0, inf, "power", {"c": C * h0 ** (2 + 2 * lam), "p": 1.0, "q": -2 - 2 * lam}),
        )
        ridges = (1.0 / M, h0)

    elif kind == "sharp":
        k = _need(c, kind, ["C", "alpha", "N", "B", "lam"])
        _require(0 < k["alpha"] < 1, kind, "alpha in (0, 1)")
        _require(k["lam"] > 0 and k["B"] >= 0, kind, "lam > 0 and B >= 0")
        _require(k["N"] > 1.0 / p.f_max, kind, "1/N inside the tabulated profile")
        C, a, N = k["C"], k["alpha"], k["N"]
        z0 = float(invert_f(p, 1.0 / N))
        b_match = 2.0 * float(eval_blasius(p, z0)[2])
        c["zeta0"], c["b_match"] = z0, b_match
        pieces = (
            Piece(0.0, 1.0 / N, "power", {"c": C * N ** (1 - a), "p": -0.5 - (1 - a) / 2, "q": 1 - a}),
            Piece(1.0 / N, inf, "profile", {"c": 2.0 * C / b_match, "p": -0.5, "shape": "fpp"}),
        )
        ridges = (1.0 / N,)
        tf = (k["B"], k["lam"] / 2.0)

    elif kind == "small-h":
        k = _need(c, kind, ["C", "alpha", "M"])
        _require(k["alpha"] > 0, kind, "alpha > 0")
        _require(k["M"] > 1.0 / p.f_max, kind, "1/M inside the tabulated profile")
        C, a, M = k["C"], k["alpha"], k["M"]
        z0 = float(invert_f(p, 1.0 / M))
        b1 = float(eval_blasius(p, z0)[1]) ** 2
        c["zeta0"], c["b1"] = z0, b1
        pieces = (
            Piece(0.0, 1.0 / M, "profile", {"c": C / b1, "p": -a, "shape": "fp2"}),
            Piece(1.0 / M, inf, "power", {"c": C, "p": -a, "q": 0.0}),
        )
        ridges = (1.0 / M,)

    elif kind == "dxphi":
        k = _need(c, kind, ["K", "eps"])
        _require(k["eps"] > 0 and k["K"] >= 0, kind, "eps > 0 and K >= 0")
        pieces = (Piece(0.0, inf, "profile", {"c": 1.0, "p": -1.0, "shape": "ffpp"}),)
        tf = (k["K"], k["eps"])

    elif kind == "d2xw-cos":
        k = _need(c, kind, ["h1", "eps"])
        _require(k["h1"] > 1.5 * math.pi, kind, "h1 > 3*pi/2 so the band stays in h >= 0")
        _require(k["eps"] > 0, kind, "eps > 0")
        h1, eps = k["h1"], k["eps"]
        pieces = (
            Piece(0.0, h1 - 1.5 * math.pi, "zero", {}),
            Piece(h1 - 1.5 * math.pi, h1, "cos", {"c": 1.0, "p": -2.0, "h1": h1}),
            Piece(h1, inf, "gauss", {"c": math.exp(eps * h1 * h1), "p": -2.0, "eps": eps}),
        )
        ridges = (h1 - 1.5 * math.pi, h1)

    else:  # d2xw-alg
        k = _need(c, kind, ["alpha", "h0", "h1", "eps"])
        _require(0 < k["alpha"] < 0.125, kind, "alpha in (0, 1/8)")
        _require(0 < k["h0"] < 1, kind, "h0 in (0, 1)")
        _require(k["h1"] > k["h0"], kind, "h1 > h0")
        _require(k["eps"] > 0, kind, "eps > 0")
        a, h0, h1, eps = k["alpha"], k["h0"], k["h1"], k["eps"]
        top = h0 ** (1 - a)
        pieces = (
            Piece(0.0, h0, "power", {"c": 1.0, "p": -1.0 + a / 2, "q": 1 - a}),
            Piece(h0, h1, "power", {"c": top, "p": -0.5, "q": 0.0}),
            Piece(h1, inf, "gauss", {"c": top * math.exp(eps * h1 * h1), "p": -0.5, "eps": eps}),
        )
        ridges = (h0, h1)

    return BarrierSpec(kind=kind, pieces=pieces, constants=c, ridges=ridges,
                       time_factor=tf, operator=_OPERATOR[kind], profile=p)


# --- piece calculus -------------------------------------------------------

def _shape(name: str, f, fp, fpp, fppp):
    """``G`` and the log-derivative ratios ``G'/G``, ``G''/G`` in closed form,
    so they stay finite where ``G`` itself underflows."""
    with np.errstate(divide="ignore", invalid="ignore"):
        if name == "fpp":
            # uses f''' = -f f''/2 and its derivative
            return fpp, -0.5 * f, -0.5 * (fp - 0.5 * f * f)
        if name == "fp2":
            return fp * fp, 2 * fpp / fp, 2 * (fpp * fpp + fp * fppp) / (fp * fp)
        if name == "ffpp":
            r1 = fp / f - 0.5 * f
            return f * fpp, r1, fpp / f - fp - 0.5 * (fp - 0.5 * f * f)
    raise BarrierError(f"unknown profile shape {name!r}")


def _piece_terms(pc: Piece, p: BlasiusProfile, K: float, psi: np.ndarray):
    """``(g, rx, rp, rpp, ratio_form)`` of one piece.

    With ``ratio_form`` True the entries are ``d_x g / g`` at fixed ``psi``,
    ``d_psi g / g`` and ``d_psi^2 g / g``. The ``zero`` and ``cos`` pieces
    vanish inside their band and return plain derivatives instead.
    """
    z = np.zeros_like(psi)
    if pc.formula == "zero":
        return z, z, z, z, False
    c, pw = pc.params["c"], pc.params["p"]
    amp = c * K**pw
    if pc.formula == "power":
        q = pc.params["q"]
        with np.errstate(divide="ignore", invalid="ignore"):
            return amp * psi**q, np.full_like(psi, pw / K), q / psi, q * (q - 1) / psi**2, True
    if pc.formula == "gauss":
        eps = pc.params["eps"]
        s2 = psi**2 / K
        return (amp * np.exp(-eps * s2), pw / K + eps * s2 / K, -2 * eps * psi / K,
                (4 * eps**2 * s2 - 2 * eps) / K, True)
    if pc.formula == "cos":
        h = psi / math.sqrt(K)
        s, co = np.sin(h - pc.params["h1"]), np.cos(h - pc.params["h1"])
        g = amp * co
        return g, pw * g / K + amp * s * h / (2 * K), -amp * s / math.sqrt(K), -amp * co / K, False
    if pc.formula == "profile":
        zeta = invert_f(p, psi / math.sqrt(K))
        f, fp, fpp, fppp = eval_blasius(p, zeta)
        G, r1, r2 = _shape(pc.params["shape"], f, fp, fpp, fppp)
        with np.errstate(divide="ignore", invalid="ignore"):
            # zeta moves with x at fixed psi: d_x zeta = -f / (2 K f')
            rx = pw / K - r1 * f / (2 * K * fp)
            rp = r1 / (math.sqrt(K) * fp)
            rpp = (r2 * fp - r1 * fpp) / (K * fp**3)
        return amp * G, rx, rp, rpp, True
    raise BarrierError(f"unknown piece formula {pc.formula!r}")


def _time_rate(spec: BarrierSpec, K: float) -> tuple:
    """``(T, T'/T)`` for the time factor ``exp(-B K^-mu)``."""
    if spec.time_factor is None:
        return 1.0, 0.0
    B, mu = spec.time_factor
    return math.exp(-B * K**-mu), B * mu * K ** (-mu - 1)


def _assemble(spec: BarrierSpec, x: float, psi: np.ndarray) -> tuple:
    K = x + 1.0
    h = psi / math.sqrt(K)
    g, rx, rp, rpp = (np.zeros_like(psi) for _ in range(4))
    ratio = np.zeros(psi.shape, dtype=bool)
    for pc in spec.pieces:
        sel = (h >= pc.lo) & (h < pc.hi)
        if np.any(sel):
            a, b, c, d, flag = _piece_terms(pc, spec.profile, K, psi[sel])
            g[sel], rx[sel], rp[sel], rpp[sel], ratio[sel] = a, b, c, d, flag
    T, tr = _time_rate(spec, K)
    # relative rates add; plain derivatives pick up g T'/T
    rx = np.where(ratio, rx + tr, T * rx + tr * T * g)
    rp = np.where(ratio, rp, T * rp)
    rpp = np.where(ratio, rpp, T * rpp)
    return T * g, rx, rp, rpp, ratio


def barrier_terms(spec: BarrierSpec, x: float, psi) -> tuple:
    """``(g, d_x g, d_psi g, d_psi^2 g)`` at station ``x``; a node on a piece
    boundary belongs to the piece on its right."""
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    g, rx, rp, rpp, ratio = _assemble(spec, x, psi)
    with np.errstate(invalid="ignore"):
        return (g, np.where(ratio, g * rx, rx), np.where(ratio, g * rp, rp),
                np.where(ratio, g * rpp, rpp))


def eval_barrier(spec: BarrierSpec, x: float, psi):
    g = barrier_terms(spec, x, psi)[0]
    return float(g[0]) if np.ndim(psi) == 0 else g


# --- certification --------------------------------------------------------

def _coefficients(spec: BarrierSpec, w: WField | None, p: BlasiusProfile, x: float, psi: np.ndarray,
                  ratio: float | None):
    """``(sqrt w, A, d_x w)`` at the samples.

    With a marched field these come from the field; in standalone mode
    ``w = ratio * wbar``.
    """
    if w is not None:
        sw = np.sqrt(np.maximum(w.values, 0.0))
        A = damping_A(w, p)
        wx = w.meta["dwdx"] if "dwdx" in w.meta else _dxw(w)
        return sw, A, np.asarray(wx), w.values
    t = wbar_terms(p, x, psi)
    ww = ratio * t["w"]
    with np.errstate(divide="ignore", invalid="ignore"):
        A = -t["dx"] / (t["w"] * (1.0 + math.sqrt(ratio)))
    return np.sqrt(ww), A, ratio * t["dx"], ww


def _apply_operator(op: str, g, gx, gpp, sw, A, wx, ww):
    r = gx - sw * gpp
    with np.errstate(divide="ignore", invalid="ignore"):
        if op == "L+A":
            r = r + A * g
        elif op == "L+A-wx/2w":
            r = r + A * g - wx / (2 * ww) * g
        elif op == "L-3wx/2w":
            r = r - 3 * wx / (2 * ww) * g
    return r


def residual_check(spec: BarrierSpec, w: WField | None, p: BlasiusProfile, region: tuple,
                   x: float | None = None, samples: int = 4001, ratio: float = 1.0) -> dict:
    """Minimum of the barrier's operator residual over ``h`` in ``region``.

    ``w`` a marched field: samples are its interior nodes in the region.
    ``w`` None: ``samples`` uniform points in ``h`` at station ``x``, with
    ``w = ratio * wbar``. Nodes within half a local cell of a ridge at the
    region's edge are dropped; a ridge strictly inside the region is an error.
    """
    lo, hi = float(region[0]), float(region[1])
    for r in spec.ridges:
        if lo < r < hi:
            raise BarrierError(f"region ({lo}, {hi}) contains the ridge h={r}")
    if w is not None:
        x = w.x
        psi_all = w.psi
        sw, A, wx, ww = _coefficients(spec, w, p, x, psi_all, None)
        h = psi_all / math.sqrt(x + 1.0)
        cell = np.gradient(h)
        keep = (h > lo) & (h < hi)
        keep[0] = keep[-1] = False
        for r in spec.ridges:
            keep &= np.abs(h - r) >= 0.5 * cell
        idx = np.nonzero(keep)[0]
        psi = psi_all[idx]
        sw, A, wx, ww = sw[idx], A[idx], wx[idx], ww[idx]
    else:
        if x is None:
            raise ValueError("standalone mode needs a station x")
        top = hi if math.isfinite(hi) else lo + 20.0
        hs = np.linspace(max(lo, 0.0), top, samples + 2)[1:-1]
        psi = hs * math.sqrt(x + 1.0)
        sw, A, wx, ww = _coefficients(spec, None, p, x, psi, ratio)
    if psi.size == 0:
        raise BarrierError("region holds no sample nodes")
    g, rx, _, rpp, prod = _assemble(spec, x, psi)
    with np.errstate(invalid="ignore", over="ignore"):
        # (x+1) * residual / g where g is a positive product form; its sign
        # is the residual's sign and it survives underflow of g
        rel = (x + 1.0) * _apply_operator(spec.operator, 1.0, rx, rpp, sw, A, wx, ww)
        plain = _apply_operator(spec.operator, g, rx, rpp, sw, A, wx, ww)
        res = np.where(prod, g * rel / (x + 1.0), plain)
    prod &= g >= 0
    sign = np.where(prod, rel, res)
    finite = np.isfinite(sign)
    k = int(np.argmin(np.where(finite, sign, np.inf)))
    rel = np.where(prod, rel, np.nan)
    return {
        "x": float(x),
        "region": [lo, hi if math.isfinite(hi) else "inf"],
        "samples": int(psi.size),
        "min_residual": float(np.nanmin(res)),
        "argmin_h": float(psi[k] / math.sqrt(x + 1.0)),
        "min_relative": float(np.nanmin(rel)) if np.any(np.isfinite(rel)) else float("nan"),
        "nonfinite": int((~finite).sum()),
        "passed": bool(sign[k] > 0 and finite.all()),
        "mode": "marched" if w is not None else f"standalone(ratio={ratio:g})",
    }


def exp_tail_margin(spec: BarrierSpec, w: WField, region=(0.0, math.inf)) -> float:
    """Closed-form residual ``g (eps psi^2/K^2 (1 - 4 eps sqrt w) + 2 eps sqrt w/K)``
    minimised over the interior nodes of a field."""
    if spec.kind != "exp-tail":
        raise BarrierError("analytic margin exists for the exp-tail barrier only")
    eps = spec.constants["eps"]
    K = w.x + 1.0
    psi = w.psi[1:-1]
    h = psi / math.sqrt(K)
    sel = (h > region[0]) & (h < region[1])
    sw = np.sqrt(np.maximum(w.values[1:-1], 0.0))[sel]
    psi = psi[sel]
    g = barrier_terms(spec, w.x, psi)[0]
    return float(np.min(g * (eps * psi**2 / K**2 * (1 - 4 * eps * sw) + 2 * eps * sw / K)))


def _timed(spec: BarrierSpec, pc: Piece, x: float, psi: np.ndarray):
    g, _, gp, _, ratio = _piece_terms(pc, spec.profile, x + 1.0, psi)
    T = _time_rate(spec, x + 1.0)[0]
    return T * g, T * (g * gp if ratio else gp)


def ridge_verify(spec: BarrierSpec, x: float) -> list:
    """One-sided values and ``h``-slopes at each ridge from the closed forms
    of the two adjacent pieces."""
    K = x + 1.0
    out = []
    for r in spec.ridges:
        psi = np.array([r * math.sqrt(K)])
        left = next(pc for pc in spec.pieces if pc.hi == r)
        right = next(pc for pc in spec.pieces if pc.lo == r)
        gl, pl = _timed(spec, left, x, psi)
        gr, pr = _timed(spec, right, x, psi)
        sl, sr = float(pl[0]) * math.sqrt(K), float(pr[0]) * math.sqrt(K)
        vl, vr = float(gl[0]), float(gr[0])
        # h is O(1), so slopes set the scale when both values vanish
        scale = max(abs(vl), abs(vr), abs(sl), abs(sr), 1e-300)
        mismatch = abs(vl - vr) / scale
        out.append({
            "x": float(x), "h": float(r), "left_value": vl, "right_value": vr,
            "continuity": mismatch, "continuous": bool(mismatch <= 1e-10),
            "left_slope": sl, "right_slope": sr, "ridge": bool(sl > sr),
        })
    return out


def _quantity(t: Trajectory, k: int, p: BlasiusProfile, quantity: str, reference):
    d = derivative_fields(t, k, p, reference)
    if quantity not in d:
        raise KeyError(f"unknown quantity {quantity!r}")
    return np.asarray(d[quantity])


def dominance(spec: BarrierSpec, t: Trajectory, quantity: str, p: BlasiusProfile | None = None,
              reference: Trajectory | None = None, x_lo: float = 10.0, x_hi: float | None = None,
              floor: float = 1e-12, slack: float = 1.1) -> dict:
    """Smallest ``C*`` with ``|q| <= C* g`` at each checkpoint.

    Nodes with ``|q| <= floor`` are ignored. Passes when every ``C*`` is
    finite and no later value exceeds ``slack`` times the running minimum.
    """
    p = p or spec.profile
    xs, cs, impossible = [], [], []
    for k in range(1, len(t)):
        x = t[k].x
        if x < x_lo - 1e-9 or (x_hi is not None and x > x_hi + 1e-9):
            continue
        q = np.abs(_quantity(t, k, p, quantity, reference))[1:-1]
        g = barrier_terms(spec, x, t[k].psi)[0][1:-1]
        live = np.isfinite(q) & (q > floor)
        bad = live & (g <= 0)
        if np.any(bad):
            impossible.append(float(x))
        # dead nodes may overflow; they are masked out
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = np.where(live & (g > 0), q / np.where(g > 0, g, 1.0), 0.0)
        xs.append(float(x))
        cs.append(float(ratio.max()) if not np.any(bad) else math.inf)
    cs_arr = np.array(cs)
    running = np.minimum.accumulate(cs_arr) if cs else cs_arr
    worst = float(np.max(cs_arr[1:] / running[:-1])) if len(cs) > 1 and running[:-1].min() > 0 else 1.0
    ok = bool(cs and np.all(np.isfinite(cs_arr)) and worst <= slack and not impossible)
    return {"quantity": quantity, "x": xs, "c_star": cs, "worst_growth": worst,
            "impossible_at": impossible, "floor": floor, "passed": ok}


def search_threshold(make: Callable[[float], BarrierSpec], check: Callable[[BarrierSpec], bool],
                     start: float, factor: float = 2.0, max_steps: int = 30) -> dict:
    """Multiply a constant by ``factor`` until ``check`` passes.

    ``factor > 1`` searches for a large constant, ``factor < 1`` for a small
    one. Returns the first passing value and the tested sequence.
    """
    value, tried = start, []
    for _ in range(max_steps):
        try:
            spec = make(value)
            ok = bool(check(spec))
        except (BarrierError, OverflowError) as exc:
            tried.append({"value": value, "passed": False, "error": str(exc)})
            if isinstance(exc, OverflowError):
                break
            value *= factor
            continue
        tried.append({"value": value, "passed": ok})
        if ok:
            return {"threshold": value, "tried": tried, "found": True}
        value *= factor
    return {"threshold": None, "tried": tried, "found": False}


def certificate(spec: BarrierSpec, residuals: list, ridge_report: list, dominance_series: dict | None = None,
                grid_density: int | None = None, extra: dict | None = None) -> dict:
    passed = all(r["passed"] for r in residuals) and all(r["continuous"] and r["ridge"] for r in ridge_report)
    if dominance_series is not None:
        passed = passed and dominance_series["passed"]
    out = {
        "kind": spec.kind,
        "constants": {k: float(v) for k, v in spec.constants.items()},
        "region": [r["region"] for r in residuals],
        "min_residual": min((r["min_residual"] for r in residuals), default=None),
        # (x+1) * residual / g; the absolute value underflows where g does
        "min_relative": min((r["min_relative"] for r in residuals), default=None),
        "residuals": residuals,
        "grid_density": grid_density,
        "ridge_report": ridge_report,
        "dominance_series": dominance_series,
        "passed": bool(passed),
    }
    if extra:
        out.update(extra)
    return out


def write_certificate(cert: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cert, indent=2, sort_keys=True, default=float) + "\n")
    return path


# constant searched per kind: (name, start, factor, indices into claimed_regions)
_SEARCH = {
    "exp-tail": [("eps", 0.2, 0.5, [0])],
    "algebraic": [("h0", 1.0, 2.0, [2]), ("M", 1.0, 2.0, [0])],
    "sharp": [("N", 1.0, 2.0, [0]), ("B", 0.25, 2.0, [1])],
    "small-h": [("alpha", None, 0.5, [0])],
    "dxphi": [("K", 0.125, 2.0, [0])],
    "d2xw-cos": [("h1", 5.0, 2.0, [0])],
    "d2xw-alg": [("h0", 0.5, 0.5, [0]), ("h1", 2.0, 2.0, [1])],
}

# quantity each barrier bounds, when a dominance series makes sense on its own
_DOMINATES = {"exp-tail": "phi", "algebraic": "phi", "sharp": "phi", "small-h": "phi", "dxphi": "dx_phi"}

RIDGE_STATIONS = (1.0, 10.0, 1e2, 1e3, 1e4)


def _station_fields(t: Trajectory, stations) -> list:
    out = []
    for x in stations:
        if x > t.x[-1] * (1 + 1e-9):
            continue
        k = int(np.argmin(np.abs(t.x - x)))
        if k > 0 and t[k] not in out:
            out.append(t[k])
    return out


def _residuals(spec, p, regions, fields, stations, bracket, samples) -> list:
    out = []
    for reg in regions:
        if fields:
            for w in fields:
                # the band may lie beyond the grid's reach at late stations
                top = w.psi[-2] / math.sqrt(w.x + 1.0)
                if reg[0] < top:
                    out.append(residual_check(spec, w, p, reg))
        else:
            out.extend(residual_check(spec, None, p, reg, x=x, samples=samples, ratio=r)
                       for x in stations for r in bracket)
    return out


def certify(kind: str, p: BlasiusProfile, trajectory: Trajectory | None = None,
            reference: Trajectory | None = None, constants: dict | None = None, search: bool = True,
            stations=RIDGE_STATIONS, bracket=(0.9, 1.1), samples: int = 4001,
            quantity: str | None = None, x_lo: float = 10.0) -> dict:
    """Search thresholds, then check residuals, ridges and dominance.

    With a trajectory the coefficients come from its checkpoints nearest to
    ``stations``; without one, from ``ratio * wbar`` for each ``ratio`` in
    ``bracket``. Constants given explicitly are never searched.
    """
    fixed = dict(constants or {})
    found = dict(fixed)
    fields = _station_fields(trajectory, stations) if trajectory is not None else []
    searches = {}
    if search:
        for name, start, factor, idx in _SEARCH[kind]:
            if name in fixed:
                continue
            if start is None:
                start = lambda_k0(p)[0]

            def make(v, name=name):
                return build_barrier(kind, p, {**found, name: v})

            def check(spec, idx=idx):
                regs = [claimed_regions(spec)[i] for i in idx]
                return all(r["passed"] for r in _residuals(spec, p, regs, fields, stations, bracket, samples))

            res = search_threshold(make, check, start, factor)
            searches[name] = res
            if res["found"]:
                found[name] = res["threshold"]
    spec = build_barrier(kind, p, found)
    residuals = _residuals(spec, p, claimed_regions(spec), fields, stations, bracket, samples)
    ridges = [r for x in RIDGE_STATIONS for r in ridge_verify(spec, x)]
    dom = None
    quantity = quantity or _DOMINATES.get(kind)
    if trajectory is not None and quantity is not None and trajectory.x[-1] >= x_lo:
        dom = dominance(spec, trajectory, quantity, p, reference=reference, x_lo=x_lo)
    density = trajectory.grid.cells if trajectory is not None else samples
    extra = {"searches": searches, "spec": spec.record(),
             "searched_all": all(s["found"] for s in searches.values())}
    cert = certificate(spec, residuals, ridges, dom, grid_density=density, extra=extra)
    cert["passed"] = bool(cert["passed"] and extra["searched_all"])
    return cert
