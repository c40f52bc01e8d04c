"""Active learning for graph node classifiers by diversified uncertainty sampling."""

from .classifier import GcnParams, TrainConfig, evaluate_accuracy, predict_proba, train
from .datasets import DatasetBundle, expand_train_split, load_dataset, write_dataset
from .gp import GpHyper, gp_fit, gp_predict, kernel_matrix
from .graph import NormalizationKind, SparseGraph, build_graph, propagate_features
from .sampling import (
    Budget,
    LabelOracle,
    compute_entropy,
    diverse_uncertainty_select,
    featprop_select,
    kmeans_pp,
    max_uncertainty_select,
    random_select,
    round_robin_select,
    run_active_learning,
    run_scattersample,
    select_nearest_to_centers,
)
from .simbench import SimConfig, generate_sim_graph, run_simulation

__version__ = "0.1.0"
