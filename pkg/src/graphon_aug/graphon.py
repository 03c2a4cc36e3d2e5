"""Step-function graphons: construction, resizing, sampling and file formats."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import FormatError, ValidationError
from .graph import Graph

__all__ = [
    "StepGraphon",
    "step_function_of_graph",
    "oracle_estimator",
    "resize_step_graphon",
    "sample_graph",
    "sbm_graphon",
    "save_graphon",
    "load_graphon",
    "dumps_graphon",
    "graphon_heatmap",
]

_SYM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Symmetric K x K matrix of connection probabilities over a partition of [0, 1].

    Cell ``k`` spans the interval of length ``partition_weights[k]`` that
    starts at the cumulative weight of the previous cells.
    """

    values: np.ndarray
    partition_weights: np.ndarray = field(default=None)

    def __post_init__(self):
        w = np.array(self.values, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ValidationError("graphon values must be a non-empty square matrix")
        if not np.all(np.isfinite(w)):
            raise ValidationError("graphon values must be finite")
        if np.abs(w - w.T).max() > _SYM_TOL:
            raise ValidationError("graphon values must be symmetric")
        if w.min() < -_SYM_TOL or w.max() > 1 + _SYM_TOL:
            raise ValidationError("graphon values must lie in [0, 1]")
        w = np.clip(0.5 * (w + w.T), 0.0, 1.0)
        k = w.shape[0]
        if self.partition_weights is None:
            p = np.full(k, 1.0 / k)
        else:
            p = np.array(self.partition_weights, dtype=np.float64).ravel()
            if p.size != k or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ValidationError("partition weights must be a probability vector of length K")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "values", w)
        object.__setattr__(self, "partition_weights", p)

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.partition_weights, 1.0 / self.resolution, rtol=0, atol=1e-12))

    def boundaries(self) -> np.ndarray:
        edges = np.concatenate([[0.0], np.cumsum(self.partition_weights)])
        edges[-1] = 1.0
        return edges

    def mean(self) -> float:
        """Integral of the graphon over the unit square."""
        p = self.partition_weights
        return float(p @ self.values @ p)

    def __eq__(self, other):
        if not isinstance(other, StepGraphon):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(
            self.partition_weights, other.partition_weights
        )

    __hash__ = None


def step_function_of_graph(graph: Graph) -> StepGraphon:
    return StepGraphon(graph.adjacency())


def _overlap(src_edges: np.ndarray, dst_edges: np.ndarray) -> np.ndarray:
    lo = np.maximum(src_edges[:-1, None], dst_edges[None, :-1])
    hi = np.minimum(src_edges[1:, None], dst_edges[None, 1:])
    return np.clip(hi - lo, 0.0, None)


def resize_step_graphon(graphon: StepGraphon, new_K: int) -> StepGraphon:
    """Re-grid onto ``new_K`` equal cells by overlap-area averaging."""
    if new_K < 1:
        raise ValidationError("new_K must be at least 1")
    if new_K == graphon.resolution and graphon.is_uniform:
        return StepGraphon(graphon.values.copy())
    dst = np.linspace(0.0, 1.0, new_K + 1)
    ov = _overlap(graphon.boundaries(), dst)
    out = (new_K * new_K) * (ov.T @ graphon.values @ ov)
    out = np.clip(0.5 * (out + out.T), 0.0, 1.0)
    return StepGraphon(out)


def oracle_estimator(step_functions: Sequence[StepGraphon], K: int) -> StepGraphon:
    """Pointwise mean of already-aligned step functions on a common K-grid."""
    if len(step_functions) == 0:
        raise ValidationError("oracle_estimator needs at least one step function")
    acc = np.zeros((K, K))
    for sf in step_functions:
        acc += resize_step_graphon(sf, K).values
    return StepGraphon(acc / len(step_functions))


def sample_graph(graphon: StepGraphon, num_nodes: int, seed: int, graph_id: str = "sample",
                 label: int | None = None, return_latent: bool = False):
    """Draw a simple graph: uniform latent positions, Bernoulli edges.

    With ``return_latent`` the latent positions are returned as well, which
    gives the oracle node alignment.
    """
    if num_nodes < 1:
        raise ValidationError("num_nodes must be at least 1")
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    latent = rng.random(num_nodes)
    inner = graphon.boundaries()[1:-1]
    cell = np.searchsorted(inner, latent, side="right")
    iu, ju = np.triu_indices(num_nodes, k=1)
    prob = graphon.values[cell[iu], cell[ju]]
    hits = rng.random(iu.size) < prob
    edges = tuple(zip(iu[hits].tolist(), ju[hits].tolist()))
    g = Graph(graph_id, num_nodes, edges, label)
    if return_latent:
        return g, latent
    return g


def sbm_graphon(block_probs, block_cells: Sequence[int] | None = None) -> StepGraphon:
    """Stochastic block model as a uniform-partition step graphon.

    ``block_cells[b]`` equal-width cells are used for block ``b``, so block
    proportions are ``block_cells / sum(block_cells)``.
    """
    probs = np.asarray(block_probs, dtype=np.float64)
    if block_cells is None:
        block_cells = [1] * probs.shape[0]
    idx = np.repeat(np.arange(probs.shape[0]), block_cells)
    return StepGraphon(probs[np.ix_(idx, idx)])


def dumps_graphon(graphon: StepGraphon) -> str:
    if not graphon.is_uniform:
        raise ValidationError("GMX stores uniform-partition graphons only; resize first")
    k = graphon.resolution
    lines = [f"GMX1 {k}"]
    for row in graphon.values:
        lines.append(" ".join(f"{v:.12e}" for v in row))
    return "\n".join(lines) + "\n"


def save_graphon(graphon: StepGraphon, path: str | os.PathLike) -> None:
    text = dumps_graphon(graphon)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_graphon(path: str | os.PathLike) -> StepGraphon:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise FormatError("empty graphon file")
    head = lines[0].split(" ")
    if len(head) != 2 or head[0] != "GMX1":
        raise FormatError("header must be 'GMX1 K'")
    try:
        k = int(head[1])
    except ValueError:
        raise FormatError("header resolution is not an integer") from None
    if k < 1:
        raise FormatError("resolution must be at least 1")
    if len(lines) != k + 1:
        raise FormatError(f"expected {k} matrix rows, found {len(lines) - 1}")
    rows = []
    for r, line in enumerate(lines[1:], start=2):
        parts = line.split(" ")
        if len(parts) != k:
            raise FormatError(f"line {r}: expected {k} values, found {len(parts)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError:
            raise FormatError(f"line {r}: non-numeric value") from None
    w = np.array(rows)
    if not np.all(np.isfinite(w)):
        raise FormatError("non-finite value")
    if w.min() < 0 or w.max() > 1:
        raise FormatError("values must lie in [0, 1]")
    if np.abs(w - w.T).max() > _SYM_TOL:
        raise FormatError("matrix is not symmetric")
    return StepGraphon(w)


def graphon_heatmap(graphon: StepGraphon, path: str | os.PathLike) -> None:
    """Write an ASCII PGM (P2); brighter pixels mean higher connection probability."""
    k = graphon.resolution
    pixels = np.floor(graphon.values * 255.0 + 0.5).astype(np.int64)
    lines = ["P2", f"{k} {k}", "255"]
    lines += [" ".join(str(int(v)) for v in row) for row in pixels]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
