"""Entropic Ricci curvature of finite reversible Markov chains.

Builds Markov triples, evaluates the transport metric and the entropy
Hessian, estimates curvature lower bounds, computes functional-inequality
constants and numerically checks the inequalities that follow from a
curvature bound.
"""

__version__ = "0.1.0"

from .chain import (
    MarkovTriple,
    build_triple,
    dirac,
    dirichlet,
    entropy,
    entropy_production,
    gamma,
    heat_kernel,
    heat_semigroup,
    semigroup_matrix,
    spectral_gap,
)
from .curvature import CurvatureConfig, curvature_at, estimate_ricci, hessian_entropy, verify_ricci
from .families import FamilySpec, make_family
from .inequalities import (
    cheeger,
    composed_pi_constant,
    mixing_time_bound,
    mixing_time_exact,
    mlsi_estimate,
)
from .metric import action, comparison_constant, diameter_upper, log_mean, point_metric
from .report import CheckReport
from .transport import w_distance
from .verifier import VerifierConfig, replay, run_all_checks

__all__ = [
    "__version__",
    "MarkovTriple",
    "build_triple",
    "dirac",
    "dirichlet",
    "entropy",
    "entropy_production",
    "gamma",
    "heat_kernel",
    "heat_semigroup",
    "semigroup_matrix",
    "spectral_gap",
    "CurvatureConfig",
    "curvature_at",
    "estimate_ricci",
    "hessian_entropy",
    "verify_ricci",
    "FamilySpec",
    "make_family",
    "cheeger",
    "composed_pi_constant",
    "mixing_time_bound",
    "mixing_time_exact",
    "mlsi_estimate",
    "action",
    "comparison_constant",
    "diameter_upper",
    "log_mean",
    "point_metric",
    "CheckReport",
    "w_distance",
    "VerifierConfig",
    "replay",
    "run_all_checks",
]
