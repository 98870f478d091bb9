"""Fractional calculus on piecewise-polynomial trajectories."""

from .kernel import MAX_ORDER, FracKernel, monomial_weights, omega
from .mittag_leffler import gronwall_bound, mittag_leffler, mittag_leffler_array
from .operators import (
    frac_integral_eval,
    history_inner_integral,
    operator_B1,
    rl_derivative_eval,
)
from .quadrature import composite_gauss, gauss_legendre, graded_gauss
from .trajectory import MAX_DEGREE, PiecewiseTrajectory

__all__ = [
    "MAX_DEGREE",
    "MAX_ORDER",
    "FracKernel",
    "PiecewiseTrajectory",
    "composite_gauss",
    "frac_integral_eval",
    "gauss_legendre",
    "graded_gauss",
    "gronwall_bound",
    "history_inner_integral",
    "mittag_leffler",
    "mittag_leffler_array",
    "monomial_weights",
    "omega",
    "operator_B1",
    "rl_derivative_eval",
]
