"""Config-driven pipeline: Blasius table, march, verification gates, decay
reports and barrier certificates, written to a reproducible output tree.

Exit status: 0 when every gate passes, 1 when a gate fails, 2 on a config
error or a failed admissibility screen.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import math
import re
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import analysis
from .barrier import KINDS, certify, write_certificate
from .blasius import (BlasiusProfile, bracketing_threshold, check_origin_derivatives, ode_residual, solve_blasius,
                      write_profile)
from .diagnostics import lambda_k0, near_wall_exponent
from .march import MarchConfig, march, self_similarity_oracle, write_trajectory
from .von_mises import InitialData, blasius_u0, gaussian_concave_u0, w0_from_u0, wbar_field

__all__ = ["ConfigError", "RunConfig", "load_config", "validate_initial_data", "resolve_initial", "run", "main"]

log = logging.getLogger(__name__)

COMMANDS = ("blasius", "march", "verify", "fit", "barrier", "all")
RESOLUTIONS = {"low": {"cells": 500, "dx0": 8e-3}, "default": {}, "high": {"cells": 4000, "dx0": 1e-3}}
INITIAL_KINDS = ("blasius-shift", "gaussian-concave", "table")
# stages each command runs, in order
STAGES = {
    "blasius": ("blasius",),
    "march": ("blasius", "march"),
    "verify": ("blasius", "march", "verify"),
    "fit": ("blasius", "march", "fit"),
    "barrier": ("blasius", "march", "barrier"),
    "all": ("blasius", "march", "verify", "fit", "barrier"),
}


class ConfigError(ValueError):
    """Bad config file; the message carries the offending line when known."""


@dataclass
class RunConfig:
    command: str = "all"
    out: str = "out"
    resolution: str = "default"
    initial: dict = field(default_factory=lambda: {"kind": "blasius-shift", "x0": 2.0})
    march: dict = field(default_factory=dict)
    reference: bool = True
    onset: float = 10.0
    oracle: bool = True
    kinds: tuple = ("exp-tail", "sharp", "dxphi", "d2xw-cos")
    search: bool = True
    enforce: bool = True
    concavity: bool = True

    def march_config(self) -> MarchConfig:
        return MarchConfig(**{**RESOLUTIONS[self.resolution], **self.march})


# ---------------------------------------------------------------- config


def _bool(s):
    v = s.strip().lower()
    if v in ("yes", "true", "on", "1"):
        return True
    if v in ("no", "false", "off", "0"):
        return False
    raise ValueError(f"expected yes/no, got {s!r}")


def _choice(options):
    def conv(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return s
    return conv


def _kinds(s):
    out = tuple(k.strip() for k in re.split(r"[,\s]+", s) if k.strip())
    bad = [k for k in out if k not in KINDS]
    if bad:
        raise ValueError(f"unknown barrier kind(s) {', '.join(bad)}; expected {', '.join(KINDS)}")
    return out


def _opt_float(s):
    return None if s.strip().lower() == "auto" else float(s)


_MARCH_TYPES = {"x_end": float, "dx0": float, "step_growth": float, "cells": int, "grading": float,
                "psi_max": _opt_float, "psi_factor": float, "w_floor_coeff": float, "picard_iters": int,
                "scheme": str, "checkpoint_ratio": float}
assert set(_MARCH_TYPES) == {f.name for f in fields(MarchConfig)}

GRAMMAR = {
    "run": {"command": _choice(COMMANDS), "out": str, "resolution": _choice(tuple(RESOLUTIONS))},
    "initial": {"kind": _choice(INITIAL_KINDS), "x0": float, "amplitude": float, "width": float, "path": str},
    "march": _MARCH_TYPES,
    "diagnostics": {"reference": _bool, "onset": float, "oracle": _bool},
    "barrier": {"kinds": _kinds, "search": _bool},
    "screen": {"enforce": _bool, "concavity": _bool},
}


def _key_lines(text: str) -> dict:
    """``(section, key) -> line number`` by a plain scan of the file."""
    out, section = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            out[(section, None)] = n
        elif section and re.match(r"[^=:]+[=:]", s):
            out[(section, re.split(r"[=:]", s, 1)[0].strip().lower())] = n
    return out


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: key outside any section: {exc.line.strip()!r}") from exc
    except configparser.ParsingError as exc:
        n = exc.errors[0][0]
        raise ConfigError(f"{source}:{n}: cannot parse line {text.splitlines()[n - 1].strip()!r}") from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate section [{exc.section}]") from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from exc
    lines = _key_lines(text)
    values = {}
    for sec in cp.sections():
        where = lines.get((sec, None), "?")
        if sec not in GRAMMAR:
            raise ConfigError(f"{source}:{where}: unknown section [{sec}]; expected one of {', '.join(GRAMMAR)}")
        for key, raw in cp.items(sec):
            n = lines.get((sec, key), "?")
            if key not in GRAMMAR[sec]:
                raise ConfigError(f"{source}:{n}: unknown key {key!r} in [{sec}]")
            try:
                values[(sec, key)] = GRAMMAR[sec][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{source}:{n}: bad value for {sec}.{key}: {exc}") from exc

    cfg = RunConfig()
    for k in ("command", "out", "resolution"):
        if ("run", k) in values:
            setattr(cfg, k, values[("run", k)])
    initial = {k: v for (s, k), v in values.items() if s == "initial"}
    if initial:
        initial.setdefault("kind", "blasius-shift")
        cfg.initial = initial
    cfg.march = {k: v for (s, k), v in values.items() if s == "march"}
    for (s, k), attr in {("diagnostics", "reference"): "reference", ("diagnostics", "onset"): "onset",
                         ("diagnostics", "oracle"): "oracle", ("barrier", "kinds"): "kinds",
                         ("barrier", "search"): "search", ("screen", "enforce"): "enforce",
                         ("screen", "concavity"): "concavity"}.items():
        if (s, k) in values:
            setattr(cfg, attr, values[(s, k)])
    try:
        cfg.march_config().grid()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: invalid [march] settings: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


# ---------------------------------------------------------- initial data


def _table_u0(path) -> InitialData:
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read initial table {path}: {exc}") from exc
    if data.shape[1] != 2 or data.shape[0] < 4:
        raise ConfigError(f"initial table {path} needs a header and at least 4 rows of y,u")
    y, u = data[:, 0], data[:, 1]
    if np.any(np.diff(y) <= 0):
        raise ConfigError(f"initial table {path}: y must increase strictly")
    spl = CubicSpline(y, u)
    y_top, u_top = float(y[-1]), float(u[-1])

    def part(k):
        s = spl if k == 0 else spl.derivative(k)

        def ev(q):
            q = np.asarray(q, dtype=float)
            return np.where(q <= y_top, s(np.minimum(q, y_top)), u_top if k == 0 else 0.0)
        return ev

    return InitialData("table", part(0), part(1), part(2), {"path": str(path)})


def resolve_initial(spec: dict, p: BlasiusProfile) -> InitialData:
    kind = spec.get("kind", "blasius-shift")
    allowed = {"blasius-shift": {"x0"}, "gaussian-concave": {"amplitude", "width"}, "table": {"path"}}[kind]
    extra = set(spec) - allowed - {"kind"}
    if extra:
        raise ConfigError(f"[initial] kind={kind} does not take {', '.join(sorted(extra))}")
    try:
        if kind == "blasius-shift":
            return blasius_u0(p, spec.get("x0", 1.0))
        if kind == "gaussian-concave":
            return gaussian_concave_u0(spec.get("amplitude", 0.5), spec.get("width", 1.0))
    except ValueError as exc:
        raise ConfigError(f"[initial] {exc}") from exc
    if "path" not in spec:
        raise ConfigError("[initial] kind=table needs path")
    return _table_u0(spec["path"])


def _gauss_rate(y, gap, lo=1e-13, hi=1e-3):
    """Local rate ``-d ln(gap) / d(y^2)`` at both ends of the band ``lo <= gap <= hi``
    beyond the peak of ``gap``.

    A Gaussian ``C e^{-c y^2}`` (times algebraic factors) keeps this rate
    bounded below; an exponential ``e^{-c y}`` sees it fall like ``1/y``.
    """
    beyond = np.arange(gap.size) > int(np.argmax(gap))
    band = np.flatnonzero(beyond & (gap >= lo) & (gap <= hi))
    if band.size < 20:
        return None
    i0, i1 = band[0], band[-1]
    lg = np.log(np.maximum(gap, 1e-300))
    s = y * y

    def rate(i):
        j0, j1 = max(i - 5, band[0]), min(i + 5, band[-1])
        return float(-(lg[j1] - lg[j0]) / (s[j1] - s[j0]))

    return {"y_lo": float(y[i0]), "y_hi": float(y[i1]), "rate_lo": rate(i0 + 5), "rate_hi": rate(i1 - 5)}


def validate_initial_data(data: InitialData, p: BlasiusProfile, y_max: float = 60.0, dy: float = 1e-3) -> dict:
    """Admissibility report for initial data ``u0``.

    Conditions: ``OI`` (wall value, wall slope, positivity, far value, and
    ``u0'' = O(y^2)`` at the wall), ``dk0`` (Gaussian approach of ``u0`` to
    1), ``decay2inf`` (``u0'' <= 0`` with a Gaussian tail), and the
    orderings of the fitted rates against the Blasius tail constant, which
    are reported as warnings only.
    """
    y = np.arange(0.0, y_max + 0.5 * dy, dy)
    u = np.asarray(data.u0(y), dtype=float)
    du = np.asarray(data.du0(y), dtype=float)
    d2 = np.asarray(data.d2u0(y), dtype=float)
    scale = float(np.max(np.abs(d2))) or 1.0

    oi = {"u0(0)=0": bool(abs(u[0]) <= 1e-12), "u0'(0)>0": bool(du[0] > 0.0),
          "u0>0": bool(np.all(u[1:] > 0.0)), "u0->1": bool(abs(u[-1] - 1.0) <= 1e-8)}
    near = (y >= 1e-3) & (y <= 1e-2)
    dn = np.abs(d2[near])
    if np.all(dn <= 1e-10 * scale):
        oi["u0''=O(y^2)"], wall_exp = True, math.inf
    else:
        yy, dd = y[near][dn > 0], dn[dn > 0]
        wall_exp = float(np.polyfit(np.log(yy), np.log(dd), 1)[0]) if yy.size > 2 else 0.0
        oi["u0''=O(y^2)"] = bool(wall_exp >= 1.9)

    gap = np.abs(1.0 - u)
    r5 = _gauss_rate(y, gap)
    dk0 = {"gaussian_decay": bool(r5 is not None and r5["rate_lo"] > 0
                                  and r5["rate_hi"] >= 0.6 * r5["rate_lo"])}

    # tabulated data carry rounding noise of order eps / dy**2 in u0''
    conc = bool(np.all(d2 <= 1e-9 * scale))
    r7 = _gauss_rate(y, np.abs(d2), lo=1e-13 * scale, hi=1e-3 * scale)
    d2inf = {"u0''<=0": conc,
             "gaussian_decay": bool(r7 is not None and r7["rate_lo"] > 0 and r7["rate_hi"] >= 0.6 * r7["rate_lo"])}

    c1 = p.c1_fit
    c5 = None if r5 is None else r5["rate_hi"]
    c7 = None if r7 is None else r7["rate_hi"]
    warnings = []
    if c5 is not None and not c5 > c1:
        warnings.append(f"dk0: fitted rate {c5:.4g} does not exceed c1 = {c1:.4g}")
    if c7 is not None and not c7 > c1:
        warnings.append(f"decay2inf: fitted rate {c7:.4g} does not exceed c1 = {c1:.4g}")
    conditions = {"OI": oi, "dk0": dk0, "decay2inf": d2inf}
    failed = [f"{name}: {k}" for name, checks in conditions.items() for k, ok in checks.items() if not ok]
    return {"name": data.name, "params": data.params, "conditions": conditions,
            "wall_exponent": wall_exp, "C5": c5, "C7": c7, "c1": c1, "rates": {"dk0": r5, "decay2inf": r7},
            "warnings": warnings, "failed": failed, "passed": not failed}


# ----------------------------------------------------------------- output


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating, float)):
        v = float(o)
        return v if math.isfinite(v) else repr(v)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(path: Path, header, columns) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\r\n")
        wr.writerow(header)
        for row in zip(*columns):
            wr.writerow([repr(float(v)) for v in row])
    return path


class _Run:
    """Mutable state of one pipeline run."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.log_lines: list = []
        self.gates: dict = {}
        self.reports: dict = {}
        self.p = None
        self.traj = None
        self.ref = None

    def note(self, msg: str):
        self.log_lines.append(msg)
        log.info(msg)

    def gate(self, name: str, passed: bool, detail: str = ""):
        self.gates[name] = bool(passed)
        self.note(f"gate {name}: {'pass' if passed else 'FAIL'}{'  ' + detail if detail else ''}")


# ----------------------------------------------------------------- stages


def _stage_blasius(r: _Run):
    p = solve_blasius()
    r.p = p
    write_profile(p, r.out / "profile.csv", r.out / "blasius.json")
    res = float(np.max(np.abs(ode_residual(p))))
    f3, f4, f5 = check_origin_derivatives(p)
    info = {"b0": p.b0, "beta_bar": p.beta_bar, "c1_fit": p.c1_fit, "c2_fit": p.c2_fit,
            "tail_rms": p.tail_rms, "ode_residual": res, "f3_0": f3, "f4_0": f4, "f5_0": f5, "step": p.step,
            "bracketing_M": bracketing_threshold(p), "lambda_k0": list(lambda_k0(p))}
    r.reports["blasius"] = info
    r.gate("blasius.ode_residual", res <= 1e-9, f"sup residual {res:.3e}")
    r.gate("blasius.f5_negative", f5 < 0.0)


def _stage_march(r: _Run):
    cfg = r.cfg.march_config()
    data = resolve_initial(r.cfg.initial, r.p)
    screen = validate_initial_data(data, r.p)
    r.reports["screen"] = screen
    for wmsg in screen["warnings"]:
        r.note(f"screen warning: {wmsg}")
    if screen["failed"]:
        msg = "; ".join(screen["failed"])
        r.note(f"screen: {msg}")
        if r.cfg.enforce:
            raise ScreenError(f"initial data not admissible: {msg}")
    if r.cfg.concavity and not screen["conditions"]["decay2inf"]["u0''<=0"]:
        raise ScreenError("concavity assertion: decay2inf: u0''<=0 violated by the initial data")
    grid = cfg.grid()
    try:
        w0 = w0_from_u0(data, grid)
    except ValueError as exc:
        raise ScreenError(f"initial data not admissible: {exc}") from exc
    r.note(f"march: {data.name} {json.dumps(_jsonable(data.params), sort_keys=True)} to x={cfg.x_end:g} "
           f"on {cfg.cells} cells, dx0={cfg.dx0:g}")
    r.traj = march(cfg, w0, profile=r.p)
    audit = analysis.audit_trajectory(r.traj)
    write_trajectory(r.traj, r.out / "trajectory", audit)
    r.gate("march.audit", audit["passed"])
    if r.cfg.reference:
        r.ref = march(cfg, wbar_field(r.p, grid, 0.0))
        write_trajectory(r.ref, r.out / "reference")
    r.reports["march"] = {"config": cfg.to_dict(), "checkpoints": len(r.traj),
                          "steps": r.traj[-1].meta.get("steps"), "audit": audit}


def _stage_verify(r: _Run):
    p, t = r.p, r.traj
    br = analysis.bracket(t, p)
    _write_csv(r.out / "verify" / "bracket.csv", ["x", "c_min", "C_max"], [br["x"], br["c_min"], br["C_max"]])
    r.gate("verify.bracket", br["passed"], f"initial {br['initial'][0]:.4g}..{br['initial'][1]:.4g}")
    conc = analysis.concavity(t)
    _write_csv(r.out / "verify" / "concavity.csv", ["x", "max_dwdx"], [conc["x"], conc["max_dwdx"]])
    # preservation is only claimed for concave data
    if r.reports["screen"]["conditions"]["decay2inf"]["u0''<=0"]:
        r.gate("verify.concavity", conc["passed"], f"max d_x w {conc['worst']:.3e}")
    res = analysis.residuals(t, p)
    _write_csv(r.out / "verify" / "residual.csv", ["x", "residual", "scheme_error", "ratio"],
               [res["x"], res["residual"], res["scheme_error"], res["ratio"]])
    r.gate("verify.residual", res["passed"], f"worst ratio {res['worst_ratio']:.3g}")
    rep = {"bracket": br, "concavity": {k: conc[k] for k in ("worst", "tol", "passed")},
           "residual": {k: res[k] for k in ("worst_ratio", "limit", "passed")},
           "identity": analysis.identity_flags(t, p)}
    if r.cfg.oracle:
        cfg = replace(r.cfg.march_config(), x_end=100.0, psi_max=None)
        orc = self_similarity_oracle(cfg, r.p)
        rep["oracle"] = orc
        r.gate("verify.oracle", orc["passed"] and orc["errors"][0] <= 1e-3,
               f"error {orc['errors'][0]:.3e}, orders x {orc['order_x']:.3g} psi {orc['order_psi']:.3g}")
    r.reports["verify"] = rep


def _stage_fit(r: _Run):
    p, t, ref, onset = r.p, r.traj, r.ref, r.cfg.onset
    if t.x[-1] < 10.0 * (onset + 1.0):
        r.note(f"fit: skipped, x_end = {t.x[-1]:g} leaves less than a decade beyond the onset {onset:g}")
        r.reports["fit"] = {"skipped": True}
        return
    fits = analysis.decay_fits(t, p, ref, x_lo=onset)
    for q, rec in fits.items():
        _write_csv(r.out / "fit" / f"{q}.csv", ["x", "sup", "scaled"], [rec["x"], rec["sup"], rec["scaled"]])
        r.note(f"fit {q}: exponent {rec['fit'].get('exponent', float('nan')):.4g}, "
               f"bounded {rec['bounded']['passed']} (ratio {rec['bounded']['ratio']:.3g})")
    rep = {"decay": {q: {k: v for k, v in rec.items() if k not in ("x", "sup", "scaled")} for q, rec in fits.items()}}
    if r.cfg.initial.get("kind") == "blasius-shift":
        rep["shift_oracle"] = analysis.shift_oracle(t, p, r.cfg.initial.get("x0", 1.0), ref, x_lo=onset)
    tl = analysis.tails(t, p, ref, x_lo=onset)
    _write_csv(r.out / "fit" / "tail.csv", ["x", "c", "rms"], [tl["x"], tl["c"], tl["rms"]])
    rep["tails"] = {k: v for k, v in tl.items() if k not in ("x", "c", "rms")}
    eu = analysis.euler_bounds(t, p, ref, x_lo=onset)
    _write_csv(r.out / "fit" / "euler.csv", ["x", "sup_u_minus_ubar", "scaled_u", "dyy_u_min_scaled", "dyy_u_max"],
               [eu["x"], eu["sup_u_minus_ubar"], eu["scaled_u"], eu["dyy_u_min_scaled"], eu["dyy_u_max"]])
    rep["euler"] = {k: v for k, v in eu.items()
                    if k not in ("x", "sup_u_minus_ubar", "scaled_u", "dyy_u_min_scaled", "dyy_u_max")}
    rep["near_wall_exponent"] = near_wall_exponent(t[-1])
    r.reports["fit"] = rep


def _stage_barrier(r: _Run):
    rep = {}
    for kind in r.cfg.kinds:
        cert = certify(kind, r.p, r.traj, reference=r.ref, search=r.cfg.search, x_lo=r.cfg.onset)
        write_certificate(_jsonable(cert), r.out / "certificates" / f"{kind}.json")
        r.gate(f"barrier.{kind}", cert["passed"],
               f"min relative residual {cert['min_relative']:.3e}" if cert["min_relative"] is not None else "")
        rep[kind] = {"passed": cert["passed"], "constants": cert["constants"], "min_relative": cert["min_relative"],
                     "searches": cert["searches"]}
    r.reports["barrier"] = rep


class ScreenError(RuntimeError):
    """Initial data failed the admissibility screen."""


_STAGE_FN = {"blasius": _stage_blasius, "march": _stage_march, "verify": _stage_verify,
             "fit": _stage_fit, "barrier": _stage_barrier}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: RunConfig, out=None) -> tuple:
    """Execute the pipeline of ``cfg.command``. Returns ``(status, summary)``."""
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    r = _Run(cfg, out)
    status, error = 0, None
    r.note(f"command {cfg.command}, resolution {cfg.resolution}")
    try:
        for stage in STAGES[cfg.command]:
            r.note(f"stage {stage}")
            _STAGE_FN[stage](r)
    except (ScreenError, ConfigError) as exc:
        status, error = 2, str(exc)
        r.note(f"error: {exc}")
    if status == 0 and not all(r.gates.values()):
        status = 1
    r.note(f"exit status {status}")
    (out / "audit.log").write_text("\n".join(r.log_lines) + "\n")
    files = {str(f.relative_to(out)): _sha256(f) for f in sorted(out.rglob("*"))
             if f.is_file() and f.name != "summary.json"}
    summary = {"command": cfg.command, "resolution": cfg.resolution, "initial": cfg.initial,
               "status": status, "error": error, "gates": r.gates, "reports": r.reports, "files": files}
    _write_json(out / "summary.json", summary)
    return status, summary


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="vonmises-prandtl", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="INI-style run configuration")
    ap.add_argument("--out", help="output directory (overrides [run] out)")
    ap.add_argument("--resolution", choices=tuple(RESOLUTIONS), help="grid and step preset")
    ap.add_argument("--command", choices=COMMANDS, help="pipeline to run (overrides [run] command)")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.resolution:
            cfg.resolution = args.resolution
        if args.command:
            cfg.command = args.command
        cfg.march_config()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    status, summary = run(cfg, args.out)
    if summary["error"]:
        print(f"error: {summary['error']}", file=sys.stderr)
    failed = [k for k, v in summary["gates"].items() if not v]
    if failed:
        print("failed gates: " + ", ".join(failed), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
