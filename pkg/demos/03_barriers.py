"""Certify barrier functions against a marched solution.

Each barrier is a piecewise function of h = psi / sqrt(x+1). Certification
searches the free constant (a large N or B, a small eps), then checks that
the operator residual is positive on the claimed bands, that every ridge
is continuous with a downward slope jump, and, for barriers that bound a
quantity, that the ratio C*(x) = max |q| / g does not grow.

Run: python3 demos/03_barriers.py   (about twenty seconds)
"""

from vonmises_prandtl.barrier import certify
from vonmises_prandtl.blasius import solve_blasius
from vonmises_prandtl.march import MarchConfig, march
from vonmises_prandtl.von_mises import gaussian_concave_u0, w0_from_u0, wbar_field

p = solve_blasius()
cfg = MarchConfig(x_end=1e3, cells=1000, dx0=4e-3)
grid = cfg.grid()
t = march(cfg, w0_from_u0(gaussian_concave_u0(), grid), p)
ref = march(cfg, wbar_field(p, grid, 0.0))

print(f"{'kind':10s} {'passed':7s} {'min rel. residual':>18s}  searched constants")
for kind in ("exp-tail", "algebraic", "sharp", "small-h", "dxphi", "d2xw-cos", "d2xw-alg"):
    cert = certify(kind, p, t, ref)
    found = {k: round(v["threshold"], 4) for k, v in cert["searches"].items() if v["found"]}
    print(f"{kind:10s} {str(cert['passed']):7s} {cert['min_relative']:18.3e}  {found}")

# Without a trajectory the coefficients come from w = r * w_bar for r in a
# bracket around one, the regime the comparison lemma guarantees.
cert = certify("sharp", p, bracket=(0.9, 1.1))
print(f"\nstandalone sharp barrier: passed={cert['passed']} "
      f"N={cert['constants']['N']:g} B={cert['constants']['B']:g}")
