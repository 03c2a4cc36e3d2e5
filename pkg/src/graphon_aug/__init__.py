"""Graphon estimation with Gromov-Wasserstein barycenters and graph data augmentation."""

from .augmentation import AugmentationPlan, apportion, augment_dataset, derive_seed
from .errors import ConfigError, FormatError, GraphonAugError, NumericError, ParseError, ValidationError
from .estimators import METHODS, EstimatorConfig, estimate
from .evaluation import (
    BenchmarkSpec,
    ClassSpec,
    ExperimentConfig,
    ExperimentReport,
    accuracy,
    run_experiment,
    synthetic_benchmark,
    train_classifier,
    wl_features,
)
from .graph import Graph, GraphDataset, load_dataset, node_measure, save_dataset, split_dataset
from .graphon import (
    StepGraphon,
    graphon_heatmap,
    load_graphon,
    oracle_estimator,
    resize_step_graphon,
    sample_graph,
    save_graphon,
    sbm_graphon,
)
from .ot import GwParams, TransportPlan, gw_barycenter, gw_cost_matrix, gw_distance, sinkhorn_plan

__version__ = "0.1.0"
