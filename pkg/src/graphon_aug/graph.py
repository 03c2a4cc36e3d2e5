"""Graph and dataset data model, node measures, JSONL I/O and splitting."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "Graph",
    "GraphDataset",
    "load_dataset",
    "save_dataset",
    "dumps_dataset",
    "node_measure",
    "split_dataset",
    "permute_graph",
]


def _canonical_edges(n: int, edges: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    out = set()
    for e in edges:
        if len(e) != 2:
            raise ValidationError(f"edge {list(e)!r} is not a pair")
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise ValidationError(f"self-loop on node {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
        pair = (u, v) if u < v else (v, u)
        if pair in out:
            raise ValidationError(f"duplicate edge {pair}")
        out.add(pair)
    return tuple(sorted(out))


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with an optional class label.

    Edges are canonicalized on construction: each pair is stored once as
    ``(u, v)`` with ``u < v`` and the tuple is sorted lexicographically.
    """

    id: str
    n: int
    edges: tuple[tuple[int, int], ...] = ()
    label: int | None = None

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValidationError(f"graph {self.id!r}: node count must be a positive integer")
        if self.label is not None and int(self.label) < 0:
            raise ValidationError(f"graph {self.id!r}: label must be nonnegative")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "id", str(self.id))
        if self.label is not None:
            object.__setattr__(self, "label", int(self.label))
        try:
            object.__setattr__(self, "edges", _canonical_edges(self.n, self.edges))
        except ValidationError as exc:
            raise ValidationError(f"graph {self.id!r}: {exc}") from None

    @property
    def node_count(self) -> int:
        return self.n

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self, dtype=np.float64) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=dtype)
        if self.edges:
            idx = np.asarray(self.edges)
            a[idx[:, 0], idx[:, 1]] = 1
            a[idx[:, 1], idx[:, 0]] = 1
        return a

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if self.edges:
            idx = np.asarray(self.edges)
            np.add.at(deg, idx[:, 0], 1)
            np.add.at(deg, idx[:, 1], 1)
        return deg

    def density(self) -> float:
        if self.n < 2:
            return 0.0
        return 2.0 * len(self.edges) / (self.n * (self.n - 1))

    @classmethod
    def from_adjacency(cls, id: str, adj: np.ndarray, label: int | None = None) -> "Graph":
        adj = np.asarray(adj)
        iu, ju = np.nonzero(np.triu(adj, k=1))
        return cls(id=id, n=adj.shape[0], edges=tuple(zip(iu.tolist(), ju.tolist())), label=label)

    def with_label(self, label: int | None) -> "Graph":
        return Graph(self.id, self.n, self.edges, label)


@dataclass(frozen=True)
class GraphDataset:
    graphs: tuple[Graph, ...] = ()
    class_labels: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        graphs = tuple(self.graphs)
        object.__setattr__(self, "graphs", graphs)
        seen = set()
        for g in graphs:
            if g.id in seen:
                raise ValidationError(f"duplicate graph id {g.id!r}")
            seen.add(g.id)
        labels = sorted({g.label for g in graphs if g.label is not None})
        object.__setattr__(self, "class_labels", tuple(labels))

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def by_class(self) -> dict[int, list[Graph]]:
        groups: dict[int, list[Graph]] = {c: [] for c in self.class_labels}
        for g in self.graphs:
            if g.label is not None:
                groups[g.label].append(g)
        return groups

    @property
    def ids(self) -> frozenset[str]:
        return frozenset(g.id for g in self.graphs)


def _graph_to_json(g: Graph) -> str:
    # key order id,label,n,edges is part of the file format
    obj = {"id": g.id, "label": g.label, "n": g.n, "edges": [list(e) for e in g.edges]}
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def dumps_dataset(dataset: GraphDataset) -> str:
    return "".join(_graph_to_json(g) + "\n" for g in dataset.graphs)


def save_dataset(dataset: GraphDataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_dataset(dataset))


def _parse_line(text: str, lineno: int) -> Graph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", lineno)
    expected = {"id", "label", "n", "edges"}
    if set(obj) != expected:
        raise ParseError(f"keys must be exactly {sorted(expected)}, got {sorted(obj)}", lineno)
    gid, label, n, edges = obj["id"], obj["label"], obj["n"], obj["edges"]
    if not isinstance(gid, str):
        raise ParseError("'id' must be a string", lineno)
    if label is not None and (not isinstance(label, int) or isinstance(label, bool)):
        raise ParseError("'label' must be an integer or null", lineno)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("'n' must be an integer >= 1", lineno)
    if not isinstance(edges, list) or not all(
        isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in e)
        for e in edges
    ):
        raise ParseError("'edges' must be a list of integer pairs", lineno)
    try:
        return Graph(gid, n, tuple(tuple(e) for e in edges), label)
    except ValidationError as exc:
        raise ValidationError(f"line {lineno}: {exc}") from None


def load_dataset(path: str | os.PathLike, format: str = "jsonl") -> GraphDataset:
    """Read a JSONL graph dataset, preserving file order."""
    if format != "jsonl":
        raise ValidationError(f"unsupported dataset format {format!r}")
    graphs = []
    ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            g = _parse_line(line, lineno)
            if g.id in ids:
                raise ValidationError(f"line {lineno}: duplicate graph id {g.id!r}")
            ids.add(g.id)
            graphs.append(g)
    return GraphDataset(tuple(graphs))


def node_measure(graph: Graph, policy: str = "degree") -> np.ndarray:
    """Probability vector over the nodes of ``graph``.

    ``degree`` weights nodes by degree / (2 |E|) and falls back to the uniform
    measure on edgeless graphs.
    """
    if policy not in ("degree", "uniform"):
        raise ValidationError(f"unknown node measure policy {policy!r}")
    n = graph.n
    if policy == "uniform" or not graph.edges:
        return np.full(n, 1.0 / n)
    deg = graph.degrees().astype(np.float64)
    return deg / (2.0 * len(graph.edges))


def split_dataset(dataset: GraphDataset, test_fraction: float, seed: int) -> tuple[GraphDataset, GraphDataset]:
    """Stratified train/test split; each class keeps at least one graph per side."""
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError("test_fraction must lie in (0, 1)")
    if any(g.label is None for g in dataset.graphs):
        raise ValidationError("split_dataset requires every graph to carry a label")
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    test_ids: set[str] = set()
    for label, members in dataset.by_class().items():
        if len(members) < 2:
            raise ValidationError(f"class {label} has {len(members)} graph(s); at least 2 are required")
        order = rng.permutation(len(members))
        n_test = int(np.floor(test_fraction * len(members) + 0.5))  # round half up
        n_test = min(max(n_test, 1), len(members) - 1)
        test_ids.update(members[i].id for i in order[:n_test])
    train = tuple(g for g in dataset.graphs if g.id not in test_ids)
    test = tuple(g for g in dataset.graphs if g.id in test_ids)
    return GraphDataset(train), GraphDataset(test)


def permute_graph(graph: Graph, permutation: Sequence[int]) -> Graph:
    """Relabel node ``u`` as ``permutation[u]``."""
    perm = [int(p) for p in permutation]
    if len(perm) != graph.n or sorted(perm) != list(range(graph.n)):
        raise ValidationError("permutation must be a bijection on the node indices")
    edges = tuple((perm[u], perm[v]) for u, v in graph.edges)
    return Graph(graph.id, graph.n, edges, graph.label)
