"""Exact and Bethe-approximate permanents of non-negative matrices."""

from ._backend import BACKEND
from .analysis import bounds_report, classify_vertex, regular_bethe_bound, sinkhorn, spectral_radius
from .covers import (
    LiftSpec,
    check_lift_bethe_identity,
    check_lift_conjectures,
    count_lifts,
    degree_M_bethe_exact,
    degree_M_bethe_sampled,
    lift_matrix,
    twobytwo_degree_M_closed,
)
from .energy import FracCoefficients, bethe_free_energy, frac_free_energy, special_kappa
from .exact import perm_bruteforce, perm_ryser, permanent
from .fw import FwOptions, frac_bethe_permanent, minimize_frac_bethe
from .matrix_io import LogValue, NonNegMatrix, load_matrix, parse_matrix, serialize_matrix
from .spa import SpaOptions, SpaResult, run_spa

__all__ = [
    "BACKEND",
    "FracCoefficients",
    "FwOptions",
    "LiftSpec",
    "LogValue",
    "NonNegMatrix",
    "SpaOptions",
    "SpaResult",
    "bethe_free_energy",
    "bounds_report",
    "check_lift_bethe_identity",
    "check_lift_conjectures",
    "classify_vertex",
    "count_lifts",
    "degree_M_bethe_exact",
    "degree_M_bethe_sampled",
    "frac_bethe_permanent",
    "frac_free_energy",
    "lift_matrix",
    "load_matrix",
    "minimize_frac_bethe",
    "parse_matrix",
    "perm_bruteforce",
    "perm_ryser",
    "permanent",
    "regular_bethe_bound",
    "run_spa",
    "serialize_matrix",
    "sinkhorn",
    "special_kappa",
    "spectral_radius",
    "twobytwo_degree_M_closed",
]
__version__ = "0.1.0"
