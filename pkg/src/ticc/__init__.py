"""Toeplitz inverse covariance-based clustering of multivariate time series.

Simultaneous segmentation and model-based clustering: each cluster is a
sparse block-Toeplitz Gaussian inverse covariance (a multilayer Markov
random field), fit by alternating an exact dynamic-programming assignment
step with an ADMM solver for the Toeplitz-constrained graphical lasso.
"""

__version__ = "0.1.0"

from .assign import (AssignmentPath, CostMatrix, InvalidModelError, assign_dp,
                     log_likelihood, nll_matrix)
from .glasso import AdmmConfig, AdmmState, GlassoProblem, GlassoSolution, solve
from .metrics import MatchResult, macro_f1, network_f1
from .objective import ObjectiveBreakdown, objective
from .solver import (ClusterModel, TiccConfig, TiccModel, bic, fit,
                     handle_empty_cluster, initialize)
from .synth import GroundTruth, generate_sequence, make_preset, random_toeplitz_precision
from .timeseries import (EmpiricalStats, SubsequenceMatrix, TimeSeries,
                         empirical_stats, load_csv, save_csv, stack_windows)
from .toeplitz import (BlockToeplitzMatrix, OccurrenceIndex, OccurrenceSet,
                       assemble, nearest_toeplitz, occurrence_sets)

__all__ = [
    "AdmmConfig", "AdmmState", "AssignmentPath", "BlockToeplitzMatrix",
    "ClusterModel", "CostMatrix", "EmpiricalStats", "GlassoProblem",
    "GlassoSolution", "GroundTruth", "InvalidModelError", "MatchResult",
    "ObjectiveBreakdown", "OccurrenceIndex", "OccurrenceSet",
    "SubsequenceMatrix", "TiccConfig", "TiccModel", "TimeSeries",
    "assemble", "assign_dp", "bic", "empirical_stats", "fit",
    "generate_sequence", "handle_empty_cluster", "initialize",
    "load_csv", "log_likelihood", "macro_f1", "make_preset", "network_f1",
    "nearest_toeplitz", "nll_matrix", "objective", "occurrence_sets",
    "random_toeplitz_precision", "save_csv", "solve", "stack_windows",
]
