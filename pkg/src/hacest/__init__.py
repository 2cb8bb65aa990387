"""Estimation of hierarchical Archimedean copulas.

The main entry points are :func:`estimate_structure` for the tree,
:func:`estimate` for families and parameters, :func:`collapse_sequence`
for non-binary trees and :func:`sample_hac` for simulation.
"""

from .collapse import CollapseTrace, collapse_sequence, estimate_fork_count, select_collapsed
from .errors import DataError, DomainError, EstimationError, HacError, TauRangeError, UnsupportedSampler
from .estimate import EstimateOutcome, EstimatorConfig, estimate
from .generators import FAMILIES, Generator, tau_of_theta, theta_of_tau
from .gof import sn_e, sn_k, sn_r
from .hac import HacTree, check_snc, evaluate, implied_tau_matrix
from .kendall import pseudo_observations, sample_tau, tau_matrix
from .sample import sample_ac, sample_hac
from .structure import StructureEstimate, estimate_structure

__all__ = [
    "CollapseTrace", "DataError", "DomainError", "EstimateOutcome", "EstimationError",
    "EstimatorConfig", "FAMILIES", "Generator", "HacError", "HacTree", "StructureEstimate",
    "TauRangeError", "UnsupportedSampler", "check_snc", "collapse_sequence", "estimate",
    "estimate_fork_count", "estimate_structure", "evaluate", "implied_tau_matrix",
    "pseudo_observations", "sample_ac", "sample_hac", "sample_tau", "select_collapsed",
    "sn_e", "sn_k", "sn_r", "tau_matrix", "tau_of_theta", "theta_of_tau",
]
