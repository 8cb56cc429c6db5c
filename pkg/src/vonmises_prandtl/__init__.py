"""Steady Prandtl boundary layer in Von Mises variables: Blasius reference,
implicit marching, decay diagnostics and barrier certification."""

from .blasius import (
    BlasiusProfile,
    check_origin_derivatives,
    eval_blasius,
    fit_tail_constants,
    invert_f,
    solve_blasius,
)

__version__ = "0.1.0"
