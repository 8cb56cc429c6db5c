"""Forward marching of ``d_x w = sqrt(w) d_psi^2 w`` with ``w(x, 0) = 0`` and
``w -> 1``, on a fixed graded psi grid."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

from .fields import PsiGrid, Trajectory, WField, default_psi_max, make_grid, second_difference

__all__ = [
    "MarchConfig",
    "MarchError",
    "StepRejected",
    "thomas",
    "step",
    "march",
    "checkpoint_stations",
    "self_similarity_oracle",
    "write_trajectory",
    "read_trajectory",
]

log = logging.getLogger(__name__)

SCHEMES = ("implicit-frozen", "crank-nicolson-frozen")


class MarchError(RuntimeError):
    pass


class StepRejected(MarchError):
    pass


@dataclass(frozen=True)
class MarchConfig:
    """Scheme and resolution parameters.

    Steps are ``dx = dx0 * (x + 1) * step_growth``, shortened to land on
    each checkpoint ``x_k = ratio**k - 1``. ``psi_max=None`` selects
    ``psi_factor * sqrt(x_end + 1)``.
    """

    x_end: float = 100.0
    dx0: float = 2e-3
    step_growth: float = 1.0
    cells: int = 2000
    grading: float = 2.0
    psi_max: float | None = None
    psi_factor: float = 10.0
    w_floor_coeff: float = 0.25
    picard_iters: int = 2
    scheme: str = "implicit-frozen"
    checkpoint_ratio: float = 2.0**0.25

    def __post_init__(self):
        if not self.dx0 > 0.0:
            raise ValueError("dx0 must be positive")
        if not self.x_end > 0.0:
            raise ValueError("x_end must be positive")
        if self.picard_iters < 1:
            raise ValueError("picard_iters must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.checkpoint_ratio > 1.0:
            raise ValueError("checkpoint_ratio must exceed 1")
        if self.step_growth <= 0.0 or self.w_floor_coeff < 0.0:
            raise ValueError("step_growth must be positive and w_floor_coeff nonnegative")

    def grid(self) -> PsiGrid:
        pm = self.psi_max if self.psi_max is not None else default_psi_max(self.x_end, self.psi_factor)
        return make_grid(self.cells, pm, self.grading)

    def to_dict(self) -> dict:
        return asdict(self)


def thomas(lower, diag, upper, rhs, pivot_floor: float = 1e-300):
    """Forward elimination and back substitution for a tridiagonal system.

    ``lower[i]`` multiplies ``x[i]`` in row ``i+1``; ``upper[i]`` multiplies
    ``x[i+1]`` in row ``i``. Plain loops; kept as the reference solver.
    """
    n = len(diag)
    c = [0.0] * n
    d = [0.0] * n
    piv = float(diag[0])
    if abs(piv) < pivot_floor:
        raise MarchError("tridiagonal pivot below floor at row 0")
    c[0] = float(upper[0]) / piv if n > 1 else 0.0
    d[0] = float(rhs[0]) / piv
    for i in range(1, n):
        piv = float(diag[i]) - float(lower[i - 1]) * c[i - 1]
        if abs(piv) < pivot_floor:
            raise MarchError(f"tridiagonal pivot below floor at row {i}")
        c[i] = float(upper[i]) / piv if i < n - 1 else 0.0
        d[i] = (float(rhs[i]) - float(lower[i - 1]) * d[i - 1]) / piv
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _solve_symmetric(diag, off, rhs):
    # LAPACK ptsv (LDL^T, no pivoting). For the symmetric M-matrix below every
    # elimination quantity keeps its sign, so nonnegative data stays
    # nonnegative in floating point.
    _, _, x, info = lapack.dptsv(diag, off, rhs, 1, 0, 0)
    if info != 0:
        raise MarchError(f"tridiagonal pivot below floor at row {info}")
    return np.ravel(x)


def _geometry(psi):
    h = np.diff(psi)
    return h, 0.5 * (h[:-1] + h[1:])


def _coefficient(w, psi, coeff, slope):
    floor = coeff * max(slope, 0.0) * psi
    return np.sqrt(np.maximum(np.maximum(w, floor), 0.0))


def _wall_slope(psi, w):
    h1, h2 = psi[1], psi[2] - psi[1]
    return (-(2 * h1 + h2) * h2 * w[0] + (h1 + h2) ** 2 * w[1] - h1 * h1 * w[2]) / (h1 * h2 * (h1 + h2))


def _advance(psi, w, dx, cfg: MarchConfig, geom=None):
    """One linearized step.

    Row ``j`` of ``w+ - theta*dx*a_j*D2 w+ = rhs`` is multiplied by
    ``m_j / a_j`` (``m_j`` the dual cell width), which turns ``D2`` into the
    symmetric flux-difference operator ``S``.
    """
    h, m = geom if geom is not None else _geometry(psi)
    inv_h = 1.0 / h
    slope = _wall_slope(psi, w)
    theta = 0.5 if cfg.scheme == "crank-nicolson-frozen" else 1.0
    a = _coefficient(w, psi, cfg.w_floor_coeff, slope)[1:-1]
    rhs0 = w[1:-1].copy()
    if theta < 1.0:
        flux = np.diff(w) * inv_h
        rhs0 += (1.0 - theta) * dx * a * np.diff(flux) / m
    off = -theta * dx * inv_h[1:-1]
    stiff = theta * dx * (inv_h[:-1] + inv_h[1:])
    new = np.empty_like(w)
    new[0], new[-1] = 0.0, 1.0
    for _ in range(cfg.picard_iters):
        ma = m / np.maximum(a, 1e-150)
        rhs = ma * rhs0
        rhs[-1] += theta * dx * inv_h[-1]
        new[1:-1] = _solve_symmetric(ma + stiff, off, rhs)
        a = _coefficient(new, psi, cfg.w_floor_coeff, slope)[1:-1]
    return new


def step(w: WField, dx: float, cfg: MarchConfig | None = None, max_halvings: int = 20) -> WField:
    """Advance one accepted step of total length ``dx``.

    On a negative value below ``-1e-12`` the step is redone as two halves,
    recursively, up to ``max_halvings`` levels.
    """
    cfg = cfg or MarchConfig()
    if not dx > 0.0:
        raise ValueError("dx must be positive")
    psi = w.grid.nodes
    geom = _geometry(psi)
    vals = _advance_checked(psi, np.array(w.values), dx, cfg, geom, max_halvings, w.x)
    return WField(
        x=w.x + dx,
        grid=w.grid,
        values=vals,
        meta={"dx": dx, "dwdx": (vals - w.values) / dx},
    )


def _advance_checked(psi, w, dx, cfg, geom, levels, x):
    new = _advance(psi, w, dx, cfg, geom)
    if new.min() < -1e-12:
        if levels == 0:
            raise StepRejected(f"negative value {new.min():.3e} persists after halving dx (x={x:.6g})")
        half = 0.5 * dx
        mid = _advance_checked(psi, w, half, cfg, geom, levels - 1, x)
        return _advance_checked(psi, mid, half, cfg, geom, levels - 1, x + half)
    if cfg.scheme == "implicit-frozen":
        # discrete maximum principle of the M-matrix step
        lo_b, hi_b = min(0.0, w.min()), max(1.0, w.max())
        if new.min() < lo_b - 1e-12 or new.max() > hi_b + 1e-12:
            raise MarchError(f"discrete maximum principle violated at x={x:.6g}")
    new[0], new[-1] = 0.0, 1.0
    return new


def checkpoint_stations(x_end: float, ratio: float) -> np.ndarray:
    """``x_k = ratio**k - 1`` below ``x_end``, then ``x_end``."""
    kmax = int(np.floor(np.log(x_end + 1.0) / np.log(ratio) + 1e-9))
    xs = ratio ** np.arange(kmax + 1) - 1.0
    xs = xs[xs < x_end * (1 - 1e-12)]
    return np.append(xs, x_end)


def _audit(w: np.ndarray, psi: np.ndarray) -> dict:
    d2 = second_difference(psi, w)
    return {
        "wall_zero": bool(w[0] == 0.0),
        "far_one": bool(w[-1] == 1.0),
        "nonnegative": bool(w.min() >= -1e-12),
        "far_curvature": float(abs(d2[-2])),
        "far_curvature_ok": bool(abs(d2[-2]) < 1e-10),
    }


def march(cfg: MarchConfig, w0: WField, profile=None) -> Trajectory:
    """March ``w0`` to ``cfg.x_end``, storing checkpoints at ``x_k = ratio**k - 1``.

    With a Blasius ``profile`` each checkpoint also records the comparison
    bracket ``min/max w / wbar`` in ``meta['audit']``.
    """
    if w0.values[0] != 0.0 or np.any(w0.values < 0.0):
        raise ValueError("initial field must vanish at the wall and be nonnegative")
    if abs(w0.values[-1] - 1.0) > 1e-8:
        raise ValueError("initial field must reach 1 at psi_max")
    psi = w0.grid.nodes
    geom = _geometry(psi)
    stations = checkpoint_stations(cfg.x_end, cfg.checkpoint_ratio)
    wbar_fn = None
    if profile is not None:
        from .von_mises import wbar as wbar_fn  # local import avoids a cycle

    def record(x, vals, dwdx, dx, n_steps):
        audit = _audit(vals, psi)
        if wbar_fn is not None:
            wb = wbar_fn(profile, x, psi[1:-1])[0]
            r = vals[1:-1] / wb
            audit["ratio_min"], audit["ratio_max"] = float(r.min()), float(r.max())
        return WField(
            x=float(x),
            grid=w0.grid,
            values=vals.copy(),
            meta={"dwdx": dwdx, "dx": dx, "steps": n_steps, "audit": audit},
        )

    w = np.array(w0.values, dtype=float)
    w[-1] = 1.0
    x = 0.0
    n_steps = 0
    out = [record(0.0, w, np.zeros_like(w), 0.0, 0)]
    for target in stations[1:]:
        while x < target:
            dx = cfg.dx0 * (x + 1.0) * cfg.step_growth
            if x + dx >= target * (1 - 1e-13) - 1e-15:
                dx = target - x
            try:
                new = _advance_checked(psi, w, dx, cfg, geom, 20, x)
            except MarchError as exc:
                raise MarchError(f"march failed at x={x:.6g}: {exc}") from exc
            dwdx = (new - w) / dx
            w = new
            x = target if dx == target - x else x + dx
            n_steps += 1
        out.append(record(x, w, dwdx, dx, n_steps))
        log.debug("checkpoint x=%.6g after %d steps", x, n_steps)
    return Trajectory(checkpoints=tuple(out), config=cfg.to_dict())


def self_similarity_oracle(cfg: MarchConfig, profile=None) -> dict:
    """Convergence study from Blasius data.

    Orders come from the finest pair, ``log2(e(2N) / e(4N))``. The combined
    study scales cells by (1, 2, 4) and dx0 by (1, 1/2, 1/4) against the
    exact field. The x study runs on the finest grid, where the psi error is
    negligible, and also compares with the exact field. The x error
    dominates that comparison, so the psi study fixes the steps and uses
    differences of nested-grid solutions.
    """
    from .blasius import solve_blasius
    from .von_mises import wbar, wbar_field

    p = profile or solve_blasius()
    cache = {}

    def final(k_cells, k_dx):
        key = (k_cells, k_dx)
        if key not in cache:
            c = replace(cfg, cells=cfg.cells * k_cells, dx0=cfg.dx0 / k_dx)
            g = c.grid()
            v = march(c, wbar_field(p, g, 0.0))[-1].values
            cache[key] = (v, g)
        return cache[key]

    def err(k_cells, k_dx):
        v, g = final(k_cells, k_dx)
        return float(np.abs(v - wbar(p, cfg.x_end, g.nodes)[0]).max())

    combined = [err(k, k) for k in (1, 2, 4)]
    x_err = [err(4, k) for k in (1, 2, 4)]
    ps = [final(k, 1)[0][::k] for k in (1, 2, 4)]
    psi_diff = [float(np.abs(ps[0] - ps[1]).max()), float(np.abs(ps[1] - ps[2]).max())]

    order_combined = float(np.log2(combined[1] / combined[2]))
    order_x = float(np.log2(x_err[1] / x_err[2]))
    order_psi = float(np.log2(psi_diff[0] / psi_diff[1]))
    grid = cfg.grid()
    return {
        "x_end": cfg.x_end,
        "cells": [cfg.cells, 2 * cfg.cells, 4 * cfg.cells],
        "dx0": [cfg.dx0, cfg.dx0 / 2, cfg.dx0 / 4],
        "errors": combined,
        "x_errors": x_err,
        "psi_differences": psi_diff,
        "error_at_x0": float(np.abs(wbar_field(p, grid, 0.0).values - wbar(p, 0.0, grid.nodes)[0]).max()),
        "order_combined": order_combined,
        "ratio_combined": combined[1] / combined[2],
        "order_x": order_x,
        "order_psi": order_psi,
        "monotone": bool(combined[0] > combined[1] > combined[2]),
        "passed": bool(order_combined >= 1.0 and order_x >= 1.0 and order_psi >= 1.9),
    }


def write_trajectory(t: Trajectory, out_dir, audit: dict | None = None) -> Path:
    """One ``psi,w`` CSV per checkpoint plus ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for k, c in enumerate(t):
        name = f"checkpoint_{k:03d}.csv"
        np.savetxt(out / name, np.column_stack([c.psi, c.values]), delimiter=",",
                   header="psi,w", comments="", fmt="%.17g")
        files.append({"file": name, "x": c.x, "audit": c.meta.get("audit", {})})
    manifest = {"x": [c.x for c in t], "config": t.config, "checkpoints": files, "audit": audit or {}}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def read_trajectory(out_dir) -> Trajectory:
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    grid = None
    cps = []
    for entry in manifest["checkpoints"]:
        data = np.loadtxt(out / entry["file"], delimiter=",", skiprows=1)
        if grid is None:
            cfg = manifest["config"]
            grid = PsiGrid(nodes=data[:, 0], psi_max=float(data[-1, 0]), grading=float(cfg.get("grading", 2.0)))
        cps.append(WField(x=float(entry["x"]), grid=grid, values=data[:, 1], meta={"audit": entry.get("audit", {})}))
    return Trajectory(checkpoints=tuple(cps), config=manifest["config"])
