"""Composite covariance selection for Gaussian graphical models.

Nodewise graph exploration scored by out-of-sample cross-entropy, with the
graphical lasso and nodewise lasso as baselines, synthetic benchmarks and
calculators for the cross-validation regret bounds.
"""

__version__ = "0.1.0"

from ._accel import backend_name
from .explore import ExplorationTrace, InitConfig, SplitConfig, nodewise_init, run_composite
from .gauss import (
    CovarianceMatrix, Dataset, SpdPair, cross_entropy, empirical_covariance, kl_divergence, sample_gaussian,
)
from .glasso import GlassoConfig, glasso_path, glasso_solve
from .graphs import Graph, compare_graphs
from .mle import MleConfig, constrained_mle
from .select import build_report, ggmsc_score, select_cvce, select_oracle
from .simulate import GraphModelSpec, make_experiment, random_true_model

__all__ = [
    "CovarianceMatrix", "Dataset", "ExplorationTrace", "GlassoConfig", "Graph", "GraphModelSpec",
    "InitConfig", "MleConfig", "SpdPair", "SplitConfig", "backend_name", "build_report", "compare_graphs",
    "constrained_mle", "cross_entropy", "empirical_covariance", "ggmsc_score", "glasso_path", "glasso_solve",
    "kl_divergence", "make_experiment", "nodewise_init", "random_true_model", "run_composite",
    "sample_gaussian", "select_cvce", "select_oracle",
]
