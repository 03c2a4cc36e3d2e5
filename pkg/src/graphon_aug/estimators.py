"""Graphon estimators: GW barycenters (GB, SGB) and four classical baselines.

The baselines (SAS, SBA, LG, MC) work on degree-sorted adjacency matrices;
GB and SGB align graphs implicitly through the transport plans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ValidationError
from .graph import Graph, node_measure
from .graphon import StepGraphon, oracle_estimator, resize_step_graphon, step_function_of_graph
from .ot import GwParams, canonical_order, gw_barycenter

__all__ = [
    "METHODS",
    "EstimatorConfig",
    "estimate",
    "estimate_gb",
    "estimate_sgb",
    "estimate_sas",
    "estimate_sba",
    "estimate_lg",
    "estimate_mc",
    "degree_sorted_adjacency",
    "smooth",
    "usvt",
    "default_resolution",
]

METHODS = ("GB", "SGB", "SAS", "SBA", "LG", "MC", "ORACLE")


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = "GB"
    resolution: int | None = None
    gw: GwParams = field(default_factory=GwParams)
    smoothing_window: int = 3
    sba_threshold: float = 0.2
    lg_groups: int | None = None  # None selects ceil(log2 N) + 1 per graph
    mc_threshold_scale: float = 2.02
    measure: str = "degree"

    def __post_init__(self):
        method = str(self.method).upper()
        if method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}; valid methods: {', '.join(METHODS)}")
        object.__setattr__(self, "method", method)
        if self.resolution is not None and self.resolution < 1:
            raise ValidationError("resolution must be at least 1")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ValidationError("smoothing_window must be an odd positive integer")
        if not self.sba_threshold > 0:
            raise ValidationError("sba_threshold must be positive")
        if self.lg_groups is not None and self.lg_groups < 1:
            raise ValidationError("lg_groups must be a positive integer or auto")
        if not self.mc_threshold_scale > 0:
            raise ValidationError("mc_threshold_scale must be positive")
        if self.measure not in ("degree", "uniform"):
            raise ValidationError("measure must be 'degree' or 'uniform'")


def default_resolution(graphs: Sequence[Graph]) -> int:
    med = float(np.median([g.n for g in graphs]))
    return max(1, min(int(med), 64))


def _resolution(graphs, config: EstimatorConfig) -> int:
    return config.resolution if config.resolution is not None else default_resolution(graphs)


def degree_sorted_adjacency(graph: Graph) -> np.ndarray:
    """Adjacency with nodes in descending degree order.

    Degree ties are resolved by colour refinement, so relabeled copies of a
    graph produce the same matrix.
    """
    adj = graph.adjacency()
    order = canonical_order(adj, graph.degrees().astype(np.float64))
    return adj[np.ix_(order, order)]


def smooth(values: np.ndarray, window: int) -> np.ndarray:
    """Truncated box filter; window 1 is the identity."""
    if window == 1:
        return np.array(values, dtype=np.float64)
    out = kernels.box_filter(np.ascontiguousarray(values, dtype=np.float64), int(window))
    return np.clip(0.5 * (out + out.T), 0.0, 1.0)


def _block_means(adj: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n_blocks = int(labels.max()) + 1
    onehot = np.zeros((adj.shape[0], n_blocks))
    onehot[np.arange(adj.shape[0]), labels] = 1.0
    sizes = onehot.sum(axis=0)
    sums = onehot.T @ adj @ onehot
    pairs = np.outer(sizes, sizes) - np.diag(sizes)  # within a block: distinct pairs only
    means = np.divide(sums, pairs, out=np.zeros_like(sums), where=pairs > 0)
    return np.clip(means, 0.0, 1.0), sizes / adj.shape[0]


def _mean_graphon(items: Sequence[StepGraphon], k: int) -> np.ndarray:
    acc = np.zeros((k, k))
    for sf in items:
        acc += resize_step_graphon(sf, k).values
    return acc / len(items)


def estimate_gb(graphs: Sequence[Graph], config: EstimatorConfig) -> StepGraphon:
    k = _resolution(graphs, config)
    mats = [g.adjacency() for g in graphs]
    mus = [node_measure(g, config.measure) for g in graphs]
    bary, _ = gw_barycenter(mats, mus, k, params=config.gw)
    return StepGraphon(bary)


def estimate_sgb(graphs: Sequence[Graph], config: EstimatorConfig) -> StepGraphon:
    gb = estimate_gb(graphs, config)
    return StepGraphon(smooth(gb.values, config.smoothing_window))


def estimate_sas(graphs: Sequence[Graph], config: EstimatorConfig) -> StepGraphon:
    k = _resolution(graphs, config)
    avg = _mean_graphon([StepGraphon(degree_sorted_adjacency(g)) for g in graphs], k)
    return StepGraphon(smooth(avg, config.smoothing_window))


def estimate_sba(graphs: Sequence[Graph], config: EstimatorConfig) -> StepGraphon:
    k = _resolution(graphs, config)
    parts = []
    for g in graphs:
        adj = degree_sorted_adjacency(g)
        labels = kernels.sba_blocks(adj, float(config.sba_threshold))
        means, weights = _block_means(adj, labels)
        parts.append(StepGraphon(means, weights))
    return StepGraphon(_mean_graphon(parts, k))


def _largest_gap_labels(sorted_degrees: np.ndarray, groups: int) -> np.ndarray:
    n = sorted_degrees.size
    groups = min(groups, n)
    labels = np.zeros(n, dtype=np.int64)
    if groups <= 1:
        return labels
    gaps = sorted_degrees[:-1] - sorted_degrees[1:]
    pick = np.lexsort((np.arange(gaps.size), -gaps))[: groups - 1]
    cuts = np.sort(pick + 1)
    labels[cuts] = 1
    return np.cumsum(labels)


def estimate_lg(graphs: Sequence[Graph], config: EstimatorConfig) -> StepGraphon:
    k = _resolution(graphs, config)
    parts = []
    for g in graphs:
        adj = degree_sorted_adjacency(g)
        deg = adj.sum(axis=1) / max(g.n - 1, 1)
        groups = config.lg_groups or (math.ceil(math.log2(g.n)) + 1 if g.n > 1 else 1)
        labels = _largest_gap_labels(deg, groups)
        means, weights = _block_means(adj, labels)
        parts.append(StepGraphon(means, weights))
    return StepGraphon(_mean_graphon(parts, k))


def usvt(matrix: np.ndarray, num_graphs: int, scale: float = 2.02) -> np.ndarray:
    """Universal singular value thresholding of an averaged K x K matrix."""
    k = matrix.shape[0]
    u, s, vt = np.linalg.svd(matrix)
    s = np.where(s >= scale * math.sqrt(k) / math.sqrt(num_graphs), s, 0.0)
    out = (u * s) @ vt
    return np.clip(0.5 * (out + out.T), 0.0, 1.0)


def estimate_mc(graphs: Sequence[Graph], config: EstimatorConfig) -> StepGraphon:
    k = _resolution(graphs, config)
    avg = _mean_graphon([StepGraphon(degree_sorted_adjacency(g)) for g in graphs], k)
    return StepGraphon(usvt(avg, len(graphs), config.mc_threshold_scale))


def estimate_oracle(graphs: Sequence[Graph], config: EstimatorConfig) -> StepGraphon:
    return oracle_estimator([step_function_of_graph(g) for g in graphs], _resolution(graphs, config))


_DISPATCH = {
    "GB": estimate_gb,
    "SGB": estimate_sgb,
    "SAS": estimate_sas,
    "SBA": estimate_sba,
    "LG": estimate_lg,
    "MC": estimate_mc,
    "ORACLE": estimate_oracle,
}


def estimate(graphs: Sequence[Graph], config: EstimatorConfig | None = None) -> StepGraphon:
    """Estimate a step graphon from ``graphs`` with ``config.method``."""
    config = config or EstimatorConfig()
    graphs = list(graphs)
    if not graphs:
        raise ValidationError("cannot estimate a graphon from zero graphs")
    return _DISPATCH[config.method](graphs, config)
