"""WL feature hashing, a small MLP classifier and the augmentation experiment runner."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .augmentation import AugmentationPlan, augment_dataset, derive_seed, estimate_class_graphons
from .errors import ConfigError, ValidationError
from .estimators import METHODS, EstimatorConfig
from .graph import Graph, GraphDataset, load_dataset, split_dataset
from .graphon import StepGraphon, sample_graph, sbm_graphon
from .ot import GwParams

__all__ = [
    "wl_features",
    "feature_matrix",
    "Classifier",
    "init_classifier",
    "loss_and_gradients",
    "train_classifier",
    "accuracy",
    "ClassSpec",
    "BenchmarkSpec",
    "synthetic_benchmark",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "REPORT_HEADER",
]

DEFAULT_RATES = (0.01, 0.05, 0.10, 0.25)
REPORT_HEADER = ("dataset", "method", "rate", "seed", "base_accuracy", "aug_accuracy", "delta")


# ------------------------------------------------------------------ features

def _hash64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big")


def wl_features(graph: Graph, iterations: int = 2, dim: int = 256) -> np.ndarray:
    """Hashed Weisfeiler-Lehman subtree histogram, normalized by node count.

    Initial labels are node degrees. At every iteration (including the
    initial one) each node label ``l`` adds one count to bucket
    ``blake2b64(f"{iteration}:{l}") % dim``.
    """
    if dim < 1 or iterations < 0:
        raise ValidationError("dim must be >= 1 and iterations >= 0")
    neighbours: list[list[int]] = [[] for _ in range(graph.n)]
    for u, v in graph.edges:
        neighbours[u].append(v)
        neighbours[v].append(u)
    labels = [str(len(nb)) for nb in neighbours]
    feats = np.zeros(dim)
    for it in range(iterations + 1):
        if it > 0:
            labels = [
                hashlib.blake2b(
                    (labels[i] + "|" + ",".join(sorted(labels[j] for j in neighbours[i]))).encode("utf-8"),
                    digest_size=8,
                ).hexdigest()
                for i in range(graph.n)
            ]
        for lab in labels:
            feats[_hash64(f"{it}:{lab}") % dim] += 1.0
    return feats / graph.n


def feature_matrix(graphs: Sequence[Graph], iterations: int = 2, dim: int = 256) -> np.ndarray:
    if not graphs:
        return np.zeros((0, dim))
    return np.stack([wl_features(g, iterations, dim) for g in graphs])


# ---------------------------------------------------------------- classifier

@dataclass
class Classifier:
    """One-hidden-layer ReLU network with a softmax output.

    ``classes[c]`` is the dataset label predicted by output unit ``c``.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    classes: tuple[int, ...]

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def class_count(self) -> int:
        return self.w2.shape[1]

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return _forward(self.params(), np.asarray(x, dtype=np.float64))[2]

    def predict(self, x: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lower class index on ties
        idx = np.argmax(self.predict_proba(x), axis=1)
        return np.asarray(self.classes)[idx]


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward(params, x):
    w1, b1, w2, b2 = params
    pre = x @ w1 + b1
    hidden = np.maximum(pre, 0.0)
    return pre, hidden, _softmax(hidden @ w2 + b2)


def loss_and_gradients(params: Sequence[np.ndarray], x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its gradients w.r.t. ``[w1, b1, w2, b2]``.

    ``y`` holds class indices (0..C-1), not dataset labels.
    """
    w1, b1, w2, b2 = params
    n = x.shape[0]
    pre, hidden, prob = _forward(params, x)
    loss = -float(np.mean(np.log(np.maximum(prob[np.arange(n), y], 1e-300))))
    d_logits = prob.copy()
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    g_w2 = hidden.T @ d_logits
    g_b2 = d_logits.sum(axis=0)
    d_hidden = (d_logits @ w2.T) * (pre > 0)
    g_w1 = x.T @ d_hidden
    g_b1 = d_hidden.sum(axis=0)
    return loss, [g_w1, g_b1, g_w2, g_b2]


def init_classifier(input_dim: int, hidden_dim: int, classes: Sequence[int], seed: int) -> Classifier:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero."""
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    c = len(classes)
    lim1 = 1.0 / math.sqrt(input_dim)
    lim2 = 1.0 / math.sqrt(hidden_dim)
    return Classifier(
        w1=rng.uniform(-lim1, lim1, size=(input_dim, hidden_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(hidden_dim, c)),
        b2=np.zeros(c),
        classes=tuple(int(k) for k in classes),
    )


def train_classifier(features, labels, hidden_dim: int = 64, epochs: int = 200,
                     learning_rate: float = 0.1, seed: int = 0, loss_history: list | None = None) -> Classifier:
    """Full-batch gradient descent on mean cross-entropy.

    If ``loss_history`` is given, the loss before every update is appended.
    """
    x = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != labels.size or x.shape[0] == 0:
        raise ValidationError("features must be a non-empty (n, d) array with one label per row")
    if not np.all(np.isfinite(x)):
        raise ValidationError("features must be finite")
    classes = sorted({int(v) for v in labels.tolist()})
    if len(classes) < 2:
        raise ValidationError("training needs examples from at least two classes")
    y = np.searchsorted(classes, labels)
    clf = init_classifier(x.shape[1], hidden_dim, classes, seed)
    params = clf.params()
    for _ in range(epochs):
        loss, grads = loss_and_gradients(params, x, y)
        if loss_history is not None:
            loss_history.append(loss)
        for p, g in zip(params, grads):
            p -= learning_rate * g
    return clf


def accuracy(classifier: Classifier, features, labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValidationError("accuracy of an empty test set is undefined")
    pred = classifier.predict(np.asarray(features, dtype=np.float64))
    return float(np.mean(pred == labels))


# --------------------------------------------------------- synthetic datasets

@dataclass(frozen=True)
class ClassSpec:
    label: int
    graphon: StepGraphon
    count: int
    min_nodes: int
    max_nodes: int

    def __post_init__(self):
        if self.count < 0 or self.min_nodes < 1 or self.max_nodes < self.min_nodes:
            raise ConfigError(f"invalid class spec for label {self.label}")


@dataclass(frozen=True)
class BenchmarkSpec:
    classes: tuple[ClassSpec, ...]

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "BenchmarkSpec":
        """Parse ``{"classes": [{"label", "count", "nodes": [lo, hi], <graphon>}]}``.

        ``<graphon>`` is one of ``"constant": p``, ``"values": [[...]]`` or
        ``"sbm": {"probs": [[...]], "cells": [...]}``.
        """
        try:
            items = obj["classes"]
            specs = []
            for c in items:
                if "constant" in c:
                    g = StepGraphon(np.array([[float(c["constant"])]]))
                elif "values" in c:
                    g = StepGraphon(np.array(c["values"], dtype=np.float64))
                elif "sbm" in c:
                    g = sbm_graphon(c["sbm"]["probs"], c["sbm"].get("cells"))
                else:
                    raise ConfigError("class spec needs 'constant', 'values' or 'sbm'")
                lo, hi = c["nodes"]
                specs.append(ClassSpec(int(c["label"]), g, int(c["count"]), int(lo), int(hi)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise ConfigError(str(exc)) from None
            raise ConfigError(f"malformed benchmark spec: {exc!r}") from None
        labels = [s.label for s in specs]
        if len(set(labels)) != len(labels):
            raise ConfigError("benchmark class labels must be distinct")
        return cls(tuple(specs))


def synthetic_benchmark(spec: BenchmarkSpec, seed: int) -> tuple[GraphDataset, dict[int, StepGraphon]]:
    """Sample a labeled dataset from per-class ground-truth graphons.

    Graph ``j`` of class ``c`` gets a size uniform in ``[min_nodes, max_nodes]``
    from ``derive_seed(seed, c, j, 0)`` and edges from ``derive_seed(seed, c, j, 1)``.
    """
    graphs = []
    for cs in spec.classes:
        for j in range(cs.count):
            n = int(np.random.default_rng(derive_seed(seed, cs.label, j, 0)).integers(cs.min_nodes, cs.max_nodes + 1))
            graphs.append(sample_graph(cs.graphon, n, derive_seed(seed, cs.label, j, 1),
                                       graph_id=f"bench-{cs.label}-{j}", label=cs.label))
    return GraphDataset(tuple(graphs)), {cs.label: cs.graphon for cs in spec.classes}


# ----------------------------------------------------------------- experiment

_ESTIMATOR_KEYS = {"resolution", "smoothing_window", "sba_threshold", "lg_groups", "mc_threshold_scale", "measure"}
_GW_KEYS = {"epsilon", "outer_iterations", "sinkhorn_iterations", "tolerance", "seed"}
_CONFIG_KEYS = {"datasets", "methods", "rates", "seeds", "split_fraction", "estimator", "classifier", "features"}


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: str | None = None
    benchmark: BenchmarkSpec | None = None
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetEntry, ...]
    methods: tuple[str, ...] = ("SAS", "SBA", "LG", "MC", "GB", "SGB")
    rates: tuple[float, ...] = DEFAULT_RATES
    seeds: tuple[int, ...] = (0,)
    split_fraction: float = 0.2
    estimator: Mapping[str, Any] = field(default_factory=dict)
    hidden_dim: int = 64
    epochs: int = 200
    learning_rate: float = 0.1
    wl_iterations: int = 2
    feature_dim: int = 256

    def __post_init__(self):
        for m in self.methods:
            if str(m).upper() not in METHODS or str(m).upper() == "ORACLE":
                raise ConfigError(f"unknown method {m!r}; valid methods: SAS, SBA, LG, MC, GB, SGB")
        object.__setattr__(self, "methods", tuple(str(m).upper() for m in self.methods))
        if any(r < 0 for r in self.rates):
            raise ConfigError("rates must be >= 0")
        if not 0 < self.split_fraction < 1:
            raise ConfigError("split_fraction must lie in (0, 1)")
        self.estimator_config("GB")  # validate estimator fields early

    def estimator_config(self, method: str) -> EstimatorConfig:
        est = dict(self.estimator)
        unknown = set(est) - _ESTIMATOR_KEYS - {"gw"}
        if unknown:
            raise ConfigError(f"unknown estimator keys: {sorted(unknown)}")
        gw = est.pop("gw", {}) or {}
        if set(gw) - _GW_KEYS:
            raise ConfigError(f"unknown gw keys: {sorted(set(gw) - _GW_KEYS)}")
        try:
            return EstimatorConfig(method=method, gw=GwParams(**gw), **est)
        except (TypeError, ValidationError) as exc:
            raise ConfigError(f"invalid estimator settings: {exc}") from None

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any], base_dir: str | os.PathLike = ".") -> "ExperimentConfig":
        if not isinstance(obj, Mapping):
            raise ConfigError("experiment config must be a JSON object")
        unknown = set(obj) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "datasets" not in obj or not obj["datasets"]:
            raise ConfigError("config needs a non-empty 'datasets' list")
        entries = []
        for i, d in enumerate(obj["datasets"]):
            if isinstance(d, str):
                d = {"path": d}
            if not isinstance(d, Mapping):
                raise ConfigError(f"dataset entry {i} must be a path or an object")
            name = str(d.get("name") or (os.path.splitext(os.path.basename(d["path"]))[0] if "path" in d else f"dataset{i}"))
            if "path" in d:
                entries.append(DatasetEntry(name, path=os.path.join(os.fspath(base_dir), d["path"])))
            elif "benchmark" in d:
                entries.append(DatasetEntry(name, benchmark=BenchmarkSpec.from_dict(d["benchmark"]), seed=int(d.get("seed", 0))))
            else:
                raise ConfigError(f"dataset entry {i} needs 'path' or 'benchmark'")
        clf = obj.get("classifier", {}) or {}
        feats = obj.get("features", {}) or {}
        if set(clf) - {"hidden_dim", "epochs", "learning_rate"}:
            raise ConfigError("classifier accepts hidden_dim, epochs, learning_rate")
        if set(feats) - {"iterations", "dim"}:
            raise ConfigError("features accepts iterations, dim")
        try:
            return cls(
                datasets=tuple(entries),
                methods=tuple(obj.get("methods", ("SAS", "SBA", "LG", "MC", "GB", "SGB"))),
                rates=tuple(float(r) for r in obj.get("rates", DEFAULT_RATES)),
                seeds=tuple(int(s) for s in obj.get("seeds", (0,))),
                split_fraction=float(obj.get("split_fraction", 0.2)),
                estimator=dict(obj.get("estimator", {}) or {}),
                hidden_dim=int(clf.get("hidden_dim", 64)),
                epochs=int(clf.get("epochs", 200)),
                learning_rate=float(clf.get("learning_rate", 0.1)),
                wl_iterations=int(feats.get("iterations", 2)),
                feature_dim=int(feats.get("dim", 256)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config value: {exc}") from None

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc.msg}") from None
        return cls.from_dict(obj, base_dir=os.path.dirname(os.path.abspath(path)))


@dataclass(frozen=True)
class ReportRow:
    dataset: str
    method: str
    rate: float
    seed: int
    base_accuracy: float  # percent
    aug_accuracy: float  # percent

    @property
    def delta(self) -> float:
        return self.aug_accuracy - self.base_accuracy


@dataclass
class ExperimentReport:
    rows: list[ReportRow]

    def to_csv(self) -> str:
        """CSV text; accuracies are percentages with two decimals.

        ``delta`` is computed from the rounded accuracies so that the file
        satisfies ``delta == aug_accuracy - base_accuracy`` exactly as printed.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for r in self.rows:
            base = round(r.base_accuracy, 2)
            aug = round(r.aug_accuracy, 2)
            writer.writerow([r.dataset, r.method, f"{r.rate:g}", r.seed, f"{base:.2f}", f"{aug:.2f}", f"{aug - base:.2f}"])
        return buf.getvalue()

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _load_entry(entry: DatasetEntry) -> GraphDataset:
    if entry.path is not None:
        return load_dataset(entry.path)
    return synthetic_benchmark(entry.benchmark, entry.seed)[0]


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Base vs augmented test accuracy for every (dataset, method, rate, seed).

    Per (dataset, seed) the data are split once; the classifier seed is the
    split seed, so base and augmented models differ only by the added graphs.
    Class graphons are estimated once per method from the training split and
    reused across rates.
    """
    rows = []
    for d_idx, entry in enumerate(config.datasets):
        dataset = _load_entry(entry)
        for s_idx, seed in enumerate(config.seeds):
            train, test = split_dataset(dataset, config.split_fraction, seed)
            feat = {g.id: wl_features(g, config.wl_iterations, config.feature_dim) for g in dataset.graphs}
            x_test = np.stack([feat[g.id] for g in test.graphs])
            y_test = np.array([g.label for g in test.graphs])

            def fit_and_score(ds: GraphDataset) -> float:
                x = np.stack([feat[g.id] if g.id in feat else wl_features(g, config.wl_iterations, config.feature_dim)
                              for g in ds.graphs])
                y = np.array([g.label for g in ds.graphs])
                clf = train_classifier(x, y, config.hidden_dim, config.epochs, config.learning_rate, seed)
                return 100.0 * accuracy(clf, x_test, y_test)

            base = fit_and_score(train)
            for m_idx, method in enumerate(config.methods):
                est_cfg = config.estimator_config(method)
                graphons = estimate_class_graphons(train, est_cfg)
                for rate in sorted(config.rates):
                    plan = AugmentationPlan(rate=rate, method=est_cfg, seed=seed)
                    augmented, _ = augment_dataset(train, plan, graphons=graphons)
                    aug = base if len(augmented) == len(train) else fit_and_score(augmented)
                    rows.append(((d_idx, m_idx, rate, s_idx),
                                 ReportRow(entry.name, method, rate, seed, base, aug)))
    rows.sort(key=lambda kv: kv[0])
    return ExperimentReport([r for _, r in rows])
