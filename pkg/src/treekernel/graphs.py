"""Core graph types: immutable vertex-labeled undirected graphs and datasets.

Vertices are dense 0-based indices. Labels are positive integers; kernels only
ever test labels for equality, so inputs with other label alphabets are
interned to integers at parse time (see :mod:`treekernel.io`). Adjacency is
stored as per-vertex strictly increasing neighbor tuples, which makes equality
checks and hashing canonical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Graph:
    """Undirected vertex-labeled graph in canonical storage.

    Instances are immutable and safe to share across workers. Use
    :func:`build_graph` instead of constructing directly; it validates and
    canonicalizes the input.
    """

    num_vertices: int
    adjacency: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...]

    @property
    def num_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (u, v) pairs with u < v, in sorted order."""
        return [(u, v) for u in range(self.num_vertices) for v in self.adjacency[u] if u < v]


@dataclass(frozen=True)
class Dataset:
    """A named collection of graphs with one integer class label per graph."""

    graphs: tuple[Graph, ...]
    class_labels: tuple[int, ...]
    name: str = "dataset"

    def __post_init__(self) -> None:
        if len(self.graphs) != len(self.class_labels):
            raise ValueError(
                f"class_labels length {len(self.class_labels)} does not match "
                f"graph count {len(self.graphs)}"
            )

    def __len__(self) -> int:
        return len(self.graphs)


@dataclass(frozen=True)
class DatasetStats:
    """Summary statistics of a dataset (sizes averaged over all graphs)."""

    size: int
    num_classes: int
    avg_nodes: float
    avg_edges: float
    num_labels: int


def build_graph(edges: Iterable[tuple[int, int]], labels: Sequence[int]) -> Graph:
    """Build a canonical Graph from an edge list and per-vertex labels.

    Edges may be listed in either orientation and with duplicates; the result
    is always simple, symmetric, and sorted. Self-loops, out-of-range vertex
    indices, and non-positive labels are rejected.
    """
    labels = tuple(int(x) for x in labels)
    n = len(labels)
    for v, lab in enumerate(labels):
        if lab < 1:
            raise ValueError(f"vertex {v} has non-positive label {lab}; labels must be >= 1")

    neighbor_sets: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-loop ({u}, {v}) is not allowed")
        for w in (u, v):
            if not 0 <= w < n:
                raise ValueError(f"edge ({u}, {v}) references vertex {w} outside [0, {n})")
        neighbor_sets[u].add(v)
        neighbor_sets[v].add(u)

    adjacency = tuple(tuple(sorted(s)) for s in neighbor_sets)
    return Graph(num_vertices=n, adjacency=adjacency, labels=labels)


def graph_stats(dataset: Dataset) -> DatasetStats:
    """Compute dataset summary statistics.

    Averages are over all graphs; the label count is the number of distinct
    vertex labels across the whole dataset.
    """
    if len(dataset) == 0:
        raise ValueError("cannot compute statistics of an empty dataset")
    n = len(dataset)
    total_nodes = sum(g.num_vertices for g in dataset.graphs)
    total_edges = sum(g.num_edges for g in dataset.graphs)
    alphabet: set[int] = set()
    for g in dataset.graphs:
        alphabet.update(g.labels)
    return DatasetStats(
        size=n,
        num_classes=len(set(dataset.class_labels)),
        avg_nodes=total_nodes / n,
        avg_edges=total_edges / n,
        num_labels=len(alphabet),
    )
