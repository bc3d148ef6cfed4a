"""Nonparametric estimation of the angular measure of multivariate extremes.

Rank-based and truncated estimators on the max-norm sphere, their
concentration bounds, minimum-volume sets and angular classifiers, plus a
Pareto x Dirichlet simulator with known ground truth.
"""

from .bounds import BoundInputs, BoundReport, bound_classification, bound_truncated, bound_untruncated, compute_delta
from .classify import AngularClassifier, empirical_risk, risk_identity_check, test_error, train_grid_majority
from .estimators import (
    AngularEstimate,
    fit_conditional,
    fit_empirical,
    fit_monte_carlo,
    fit_oracle,
    fit_truncated,
    truncation_level,
)
from .geometry import FullSphere, Grid, GridCell, HalfSpaceCap, Intersection, SphereSet, TauInterior, Union, angle, norm
from .mvset import MvResult, score_anomalies, solve_mvset, solve_mvset_greedy_cells
from .simgen import SimSpec, oracle_margin_transform, sample, true_angular_mass
from .transform import Dataset, RankModel, fit_ranks, read_dataset, write_dataset

__version__ = "0.1.0"

__all__ = [
    "AngularClassifier", "AngularEstimate", "BoundInputs", "BoundReport", "Dataset", "FullSphere", "Grid",
    "GridCell", "HalfSpaceCap", "Intersection", "MvResult", "RankModel", "SimSpec", "SphereSet", "TauInterior",
    "Union", "angle", "bound_classification", "bound_truncated", "bound_untruncated", "compute_delta",
    "empirical_risk", "fit_conditional", "fit_empirical", "fit_monte_carlo", "fit_oracle", "fit_ranks",
    "fit_truncated", "norm", "oracle_margin_transform", "read_dataset", "risk_identity_check", "sample",
    "score_anomalies", "solve_mvset", "solve_mvset_greedy_cells", "test_error", "train_grid_majority",
    "true_angular_mass", "truncation_level", "write_dataset",
]
