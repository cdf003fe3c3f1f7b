"""Functional differential graph estimation.

Estimates where the conditional-independence structure of two populations of
multivariate curves differs, by fitting the difference of their FPCA-score
precision matrices directly with a group-lasso penalty.
"""

from .diffgraph import EdgeSet, VoteConfig, block_norms, majority_vote_estimate, threshold_edges
from .evalkit import ExperimentConfig, RocCurve, fit_fudge, run_experiment, write_results
from .exceptions import FundiffError
from .fpca import fpca_covariance, scores
from .funcdata import BasisSpec, CurvePanel, TimeGrid, smooth
from .simgen import SimModelSpec, simulate
from .solver import DeltaEstimate, SolverConfig, fit, lambda_path
from .theory import TheoryInputs, check_conditions, compute_constants

__all__ = [
    "BasisSpec", "CurvePanel", "DeltaEstimate", "EdgeSet", "ExperimentConfig", "FundiffError", "RocCurve",
    "SimModelSpec", "SolverConfig", "TheoryInputs", "TimeGrid", "VoteConfig", "block_norms", "check_conditions",
    "compute_constants", "fit", "fit_fudge", "fpca_covariance", "lambda_path", "majority_vote_estimate",
    "run_experiment", "scores", "simulate", "smooth", "threshold_edges", "write_results",
]
