"""Weighted Galerkin solvers for the degenerate elliptic Heston obstacle problem

    min{A u - f, u - psi} = 0,
    A v = -(y/2)(v_xx + 2 rho sigma v_xy + sigma^2 v_yy) - (r - q - y/2) v_x
          - kappa (theta - y) v_y + r v,

on rectangles in the upper half-plane, with no boundary condition on the
degenerate edge y = 0.
"""
from .assembly import DiscreteForm, apply_A, apply_A_divergence, apply_A_lambda, assemble
from .envelopes import EnvelopePair, check_admissible_envelopes, check_barrier, derive_envelopes
from .errors import *  # noqa: F401,F403
from .fields import SmoothField
from .params import CoordinateChange, DerivedConstants, HestonParams, affine_change, \
    derive_constants, map_function, normalize_b1, validate
from .solvers import PenaltyConfig, SolveReport, lcp_psor, solve_coercive, \
    solve_noncoercive_equation, solve_penalized, solve_vi_coercive, solve_vi_noncoercive
from .weighted_space import Domain, GridFunction, WeightedGrid, build_grid, weight

__version__ = "0.1.0"
