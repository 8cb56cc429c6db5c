"""Grid and field containers shared by the coordinate, marching and
diagnostic layers, plus nonuniform finite-difference operators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PsiGrid",
    "WField",
    "Trajectory",
    "make_grid",
    "default_psi_max",
    "second_difference",
    "first_difference",
]


@dataclass(frozen=True)
class PsiGrid:
    """Graded grid ``psi_j = psi_max * (j / cells)**grading``, ``j = 0..cells``."""

    nodes: np.ndarray
    psi_max: float
    grading: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("grid needs at least 3 nodes")
        if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0.0):
            raise ValueError("grid must start at 0 and increase strictly")
        if self.grading < 1.0:
            raise ValueError("grading exponent must be >= 1")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self) -> int:
        """Node count."""
        return int(self.nodes.size)

    @property
    def cells(self) -> int:
        return self.n - 1

    def refined(self, factor: int = 2) -> "PsiGrid":
        """Nested refinement: every node of ``self`` is a node of the result."""
        return make_grid(self.cells * factor, self.psi_max, self.grading)


def make_grid(cells: int, psi_max: float, grading: float = 2.0) -> PsiGrid:
    s = np.arange(cells + 1) / cells
    nodes = psi_max * s**grading
    nodes[-1] = psi_max
    return PsiGrid(nodes=nodes, psi_max=float(psi_max), grading=float(grading))


def default_psi_max(x_end: float, k: float = 10.0) -> float:
    """Far-field truncation ``k * sqrt(x_end + 1)``; ``k >= 8``."""
    if k < 8.0:
        raise ValueError("far-field factor k must be >= 8")
    return float(k * np.sqrt(x_end + 1.0))


@dataclass(frozen=True)
class WField:
    """``w = u**2`` sampled on a PsiGrid at station ``x``.

    ``meta`` carries scheme bookkeeping; ``meta["dwdx"]``, when present, is
    the backward difference ``(w_n - w_{n-1}) / dx_n`` of the step that
    produced this field.
    """

    x: float
    grid: PsiGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def psi(self) -> np.ndarray:
        return self.grid.nodes

    def wall_slope(self) -> float:
        """One-sided estimate of ``d_psi w(0+)`` from the first two cells."""
        p, w = self.grid.nodes, self.values
        # quadratic through (0, w0), (p1, w1), (p2, w2), derivative at 0
        h1, h2 = p[1], p[2] - p[1]
        return float(
            (-(2 * h1 + h2) * h2 * w[0] + (h1 + h2) ** 2 * w[1] - h1 * h1 * w[2])
            / (h1 * h2 * (h1 + h2))
        )


@dataclass(frozen=True)
class Trajectory:
    """Checkpointed march output. All checkpoints share one grid."""

    checkpoints: tuple
    config: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        cps = tuple(self.checkpoints)
        if not cps:
            raise ValueError("empty trajectory")
        xs = np.array([c.x for c in cps])
        if np.any(np.diff(xs) <= 0.0):
            raise ValueError("checkpoint stations must increase strictly")
        g = cps[0].grid
        if any(c.grid is not g and not np.array_equal(c.grid.nodes, g.nodes) for c in cps):
            raise ValueError("checkpoints must share one grid")
        object.__setattr__(self, "checkpoints", cps)

    def __len__(self) -> int:
        return len(self.checkpoints)

    def __getitem__(self, k) -> WField:
        return self.checkpoints[k]

    def __iter__(self):
        return iter(self.checkpoints)

    @property
    def x(self) -> np.ndarray:
        return np.array([c.x for c in self.checkpoints])

    @property
    def grid(self) -> PsiGrid:
        return self.checkpoints[0].grid

    def at(self, x: float, rtol: float = 1e-9) -> WField:
        """Checkpoint at station ``x``."""
        xs = self.x
        k = int(np.argmin(np.abs(xs - x)))
        if abs(xs[k] - x) > rtol * max(1.0, abs(x)):
            raise KeyError(f"no checkpoint at x={x}")
        return self.checkpoints[k]


def second_difference(psi: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Three-point second derivative on a nonuniform grid.

    Interior nodes only; the two end entries are NaN.
    """
    v = np.asarray(v, dtype=float)
    hm = psi[1:-1] - psi[:-2]
    hp = psi[2:] - psi[1:-1]
    out = np.full(v.shape, np.nan)
    out[1:-1] = 2.0 * (hm * v[2:] - (hm + hp) * v[1:-1] + hp * v[:-2]) / (hm * hp * (hm + hp))
    return out


def first_difference(psi: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Second-order first derivative on a nonuniform grid, one-sided at the ends."""
    v = np.asarray(v, dtype=float)
    out = np.empty(v.shape)
    hm = psi[1:-1] - psi[:-2]
    hp = psi[2:] - psi[1:-1]
    out[1:-1] = (hm * hm * v[2:] + (hp * hp - hm * hm) * v[1:-1] - hp * hp * v[:-2]) / (
        hm * hp * (hm + hp)
    )
    h1, h2 = psi[1] - psi[0], psi[2] - psi[1]
    out[0] = (-(2 * h1 + h2) * h2 * v[0] + (h1 + h2) ** 2 * v[1] - h1 * h1 * v[2]) / (
        h1 * h2 * (h1 + h2)
    )
    g1, g2 = psi[-1] - psi[-2], psi[-2] - psi[-3]
    out[-1] = ((2 * g1 + g2) * g2 * v[-1] - (g1 + g2) ** 2 * v[-2] + g1 * g1 * v[-3]) / (
        g1 * g2 * (g1 + g2)
    )
    return out
