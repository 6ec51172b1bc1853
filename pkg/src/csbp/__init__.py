"""Continuous SBP operators with local-projection stabilization.

The package builds diagonal-norm summation-by-parts (SBP) operators on
the reference interval and the reference triangle, the matching
projection- and derivative-based dissipation operators, and uses them
in globally continuous, energy- and entropy-stable discretizations of
linear advection and the 2D Euler equations.
"""

__version__ = "0.1.0"

from .lgl import Lgl1D, lgl_rule, Vandermonde1D, legendre_vandermonde
from .sbp1d import (
    Sbp1D,
    build_sbp_1d,
    derivative_dissipation_1d,
    lps_dissipation_1d,
    rank_one_equivalence,
)

