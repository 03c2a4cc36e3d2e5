"""Per-class graphon estimation and synthetic graph generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .estimators import EstimatorConfig, estimate
from .graph import Graph, GraphDataset
from .graphon import StepGraphon, sample_graph

__all__ = [
    "AugmentationPlan",
    "apportion",
    "augment_dataset",
    "estimate_class_graphons",
    "derive_seed",
    "round_half_up",
    "SYNTH_PREFIX",
]

SYNTH_PREFIX = "synth-"
_MASK = 0xFFFFFFFFFFFFFFFF


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed: h <- splitmix64(h xor part), h0 = 0."""
    h = 0
    for p in parts:
        h = _splitmix64(h ^ (int(p) & _MASK))
    return h


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def apportion(total: int, class_counts: Sequence[int]) -> list[int]:
    """Largest-remainder apportionment; equal remainders favour the lower index."""
    counts = [int(c) for c in class_counts]
    if total < 0 or any(c < 0 for c in counts):
        raise ValidationError("apportion needs nonnegative total and counts")
    denom = sum(counts)
    if denom == 0:
        raise ValidationError("apportion needs at least one positive count")
    # integer arithmetic keeps remainder ties exact
    base = [total * c // denom for c in counts]
    rem = [total * c % denom for c in counts]
    left = total - sum(base)
    for i in sorted(range(len(counts)), key=lambda i: (-rem[i], i))[:left]:
        base[i] += 1
    return base


@dataclass(frozen=True)
class AugmentationPlan:
    """How many synthetic graphs to add and how to estimate the class graphons.

    ``rate`` is a fraction of the training-set size. Synthetic node counts
    are drawn uniformly from the observed sizes of the class (the only
    ``node_count_policy`` available).
    """

    rate: float = 0.1
    method: EstimatorConfig = field(default_factory=EstimatorConfig)
    node_count_policy: str = "empirical"
    seed: int = 0

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValidationError("augmentation rate must be >= 0")
        if self.node_count_policy != "empirical":
            raise ValidationError("node_count_policy must be 'empirical'")


def estimate_class_graphons(train: GraphDataset, config: EstimatorConfig,
                            classes: Sequence[int] | None = None) -> dict[int, StepGraphon]:
    groups = train.by_class()
    labels = list(train.class_labels) if classes is None else list(classes)
    out = {}
    for label in labels:
        members = groups.get(label, [])
        if not members:
            raise ValidationError(f"class {label} has no training graphs")
        out[label] = estimate(members, config)
    return out


def augment_dataset(
    train: GraphDataset,
    plan: AugmentationPlan,
    graphons: Mapping[int, StepGraphon] | None = None,
    classes: Sequence[int] | None = None,
) -> tuple[GraphDataset, dict[int, StepGraphon]]:
    """Append graphs sampled from per-class graphons learned on ``train``.

    ``round_half_up(rate * |train|)`` synthetic graphs are apportioned over
    classes by class frequency. Graph ``j`` of class ``c`` takes its node
    count from ``derive_seed(seed, c, j, 0)`` and its edges from
    ``derive_seed(seed, c, j, 1)``. Pass ``graphons`` to reuse estimates
    across rates.
    """
    labels = list(train.class_labels) if classes is None else list(classes)
    groups = train.by_class()
    for label in labels:
        if not groups.get(label):
            raise ValidationError(f"class {label} has no training graphs")
    if graphons is None:
        graphons = estimate_class_graphons(train, plan.method, labels)
    else:
        graphons = {label: graphons[label] for label in labels}

    total = round_half_up(plan.rate * len(train))
    if total == 0 or not labels:
        return train, dict(graphons)
    per_class = apportion(total, [len(groups[label]) for label in labels])

    synth = []
    for label, count in zip(labels, per_class):
        sizes = np.array([g.n for g in groups[label]])
        for j in range(count):
            pick = np.random.default_rng(derive_seed(plan.seed, label, j, 0)).integers(sizes.size)
            synth.append(sample_graph(graphons[label], int(sizes[pick]), derive_seed(plan.seed, label, j, 1),
                                      graph_id=f"{SYNTH_PREFIX}{label}-{j}", label=label))
    return GraphDataset(train.graphs + tuple(synth)), dict(graphons)
