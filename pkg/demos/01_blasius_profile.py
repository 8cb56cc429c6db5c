"""Shoot for the Blasius profile and look at the numbers everything else
is built on.

Run: python3 demos/01_blasius_profile.py
"""

import numpy as np

from vonmises_prandtl.blasius import check_origin_derivatives, eval_blasius, ode_residual, solve_blasius

p = solve_blasius()
print(f"wall shear f''(0)       {p.b0:.11f}")
print(f"displacement constant   {p.beta_bar:.5f}")

# Near the wall f''' and f'''' vanish; the fifth derivative is the first
# one that does not, and its sign is what makes w_bar concave in psi there.
f3, f4, f5 = check_origin_derivatives(p)
print(f"f'''(0) = {f3:.1e}   f''''(0) = {f4:.1e}   f^(5)(0) = {f5:.6f}")

# Far out f'' behaves like exp(-c1 zeta^2 - c2 zeta); c1 should be 1/4.
print(f"tail fit c1 = {p.c1_fit:.4f}, c2 = {p.c2_fit:.4f}, rms {p.tail_rms:.1e}")
print(f"ODE residual (independent differences) {np.abs(ode_residual(p)).max():.1e}")

print("\n zeta      f          f'         f''")
for z in (0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 14.0):
    f, fp, fpp, _ = eval_blasius(p, z)
    print(f"{z:5.1f}  {f:9.5f}  {fp:9.6f}  {fpp:10.3e}")
