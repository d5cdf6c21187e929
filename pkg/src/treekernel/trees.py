"""Truncated BFS trees, root-to-vertex path patterns, and tree signatures.

Child ordering
--------------
BFS trees are made unique by enqueueing the unvisited neighbors of each
dequeued vertex in a fixed order: ascending vertex label, then ascending
eigenvector centrality, then ascending vertex index. Centrality comparisons
go through :func:`treekernel.centrality.tie_buckets`, so scores within the
tie tolerance fall through to the index tie-break. Because the key is a
total order on vertices, we pre-sort each adjacency list once per graph and
every BFS then just filters visited vertices.

Signatures
----------
A depth-k tree is serialized to its vertex labels in BFS-visit order with a
separator token (0, below any valid label) between consecutive levels. The
separator distinguishes trees whose flat label concatenations collide across
shapes or multi-digit labels; dropping the separators recovers the flat
sequence. Signatures of all vertices of a dataset at one fixed depth are
interned to integer ids 1..N in lexicographic order, and a super-path
pattern is the id sequence along a path, canonicalized under reversal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .centrality import CentralityVector, eigenvector_centrality, tie_buckets
from .graphs import Graph

# Level separator inside signature token streams; vertex labels are >= 1.
SEPARATOR = 0

# A canonical path pattern: a label (or signature-id) sequence that compares
# no greater than its reverse.
PathPattern = tuple[int, ...]


@dataclass(frozen=True)
class BfsTree:
    """Truncated BFS tree with deterministic child ordering.

    ``order`` is the BFS visit sequence (``order[0]`` is the root); ``parent``
    is aligned with ``order`` and holds each visited vertex's tree parent
    (None for the root). ``level_starts[i]`` is the index in ``order`` where
    depth-i vertices begin.
    """

    root: int
    order: tuple[int, ...]
    parent: tuple[int | None, ...]
    depth: int
    level_starts: tuple[int, ...]

    def children(self) -> dict[int, list[int]]:
        """Tree children of each visited vertex, in visit order."""
        out: dict[int, list[int]] = {v: [] for v in self.order}
        for v, p in zip(self.order, self.parent):
            if p is not None:
                out[p].append(v)
        return out


@dataclass(frozen=True)
class TreeSignature:
    """Serialized depth-k BFS tree: labels in visit order, levels separated."""

    tokens: tuple[int, ...]
    depth: int

    @property
    def labels(self) -> tuple[int, ...]:
        """The flat label sequence, separators dropped."""
        return tuple(t for t in self.tokens if t != SEPARATOR)


@dataclass(frozen=True)
class SignatureInterner:
    """Dataset-global mapping of distinct signatures to ids 1..N.

    Ids follow the lexicographic order of the signature token streams,
    so equal trees get equal ids across graphs.
    """

    ids: dict[tuple[int, ...], int]
    depth: int

    def id_of(self, sig: TreeSignature) -> int:
        if sig.depth != self.depth:
            raise ValueError(f"signature depth {sig.depth} does not match interner depth {self.depth}")
        try:
            return self.ids[sig.tokens]
        except KeyError:
            raise ValueError(
                f"signature {sig.tokens} not present in interner; it was built over a different dataset"
            ) from None

    def __len__(self) -> int:
        return len(self.ids)


def vertex_order_ranks(g: Graph, c: CentralityVector) -> list[int]:
    """Rank of each vertex under the (label, centrality, index) child order."""
    buckets = tie_buckets(c.scores)
    ordering = sorted(range(g.num_vertices), key=lambda v: (g.labels[v], buckets[v], v))
    ranks = [0] * g.num_vertices
    for r, v in enumerate(ordering):
        ranks[v] = r
    return ranks


def ordered_adjacency(g: Graph, c: CentralityVector) -> list[tuple[int, ...]]:
    """Adjacency lists re-sorted by the child-ordering rule."""
    ranks = vertex_order_ranks(g, c)
    return [tuple(sorted(nbrs, key=ranks.__getitem__)) for nbrs in g.adjacency]


def _bfs(oadj: Sequence[tuple[int, ...]], n: int, root: int, depth: int):
    """Level-by-level BFS over pre-ordered adjacency, truncated at ``depth``.

    Returns (order, parent, level_starts) as plain lists.
    """
    order = [root]
    parent: list[int | None] = [None]
    level_starts = [0]
    visited = bytearray(n)
    visited[root] = 1
    lo, hi = 0, 1
    for _ in range(depth):
        if lo == hi:
            break
        level_starts.append(hi)
        for i in range(lo, hi):
            v = order[i]
            for w in oadj[v]:
                if not visited[w]:
                    visited[w] = 1
                    order.append(w)
                    parent.append(v)
        lo, hi = hi, len(order)
    if level_starts[-1] == len(order):
        level_starts.pop()
    return order, parent, level_starts


def build_bfs_tree(g: Graph, root: int, depth: int, c: CentralityVector | None = None) -> BfsTree:
    """Truncated BFS tree of the given depth rooted at ``root``.

    Depth 0 yields the root alone. Centrality is computed on demand when not
    supplied; hot paths should precompute it once per graph.
    """
    if not 0 <= root < g.num_vertices:
        raise ValueError(f"root {root} out of range for graph with {g.num_vertices} vertices")
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    if c is None:
        c = eigenvector_centrality(g)
    order, parent, level_starts = _bfs(ordered_adjacency(g, c), g.num_vertices, root, depth)
    return BfsTree(
        root=root,
        order=tuple(order),
        parent=tuple(parent),
        depth=depth,
        level_starts=tuple(level_starts),
    )


def enumerate_paths(t: BfsTree) -> list[tuple[int, ...]]:
    """Root-to-vertex paths of the tree, one per vertex, in visit order.

    Includes the length-1 path consisting of the root alone. Every path is
    simple because each vertex appears at most once in a BFS tree.
    """
    index = {v: i for i, v in enumerate(t.order)}
    paths: list[tuple[int, ...]] = []
    for v, p in zip(t.order, t.parent):
        if p is None:
            paths.append((v,))
        else:
            paths.append(paths[index[p]] + (v,))
    return paths


def canonical_pattern(labels: Sequence[int]) -> PathPattern:
    """The lexicographically smaller of a label sequence and its reverse.

    Paths in an undirected graph are identified with their reversals, so
    patterns are counted in this canonical orientation.
    """
    t = tuple(labels)
    if not t:
        raise ValueError("cannot canonicalize an empty sequence")
    r = t[::-1]
    return t if t <= r else r


def signature_tokens(
    labels: Sequence[int], order: Sequence[int], level_starts: Sequence[int], k: int
) -> tuple[int, ...]:
    """Serialize the depth-k truncation of a BFS tree given as (order, level_starts).

    The tree may have been built to a depth >= k; levels beyond k are ignored.
    """
    tokens: list[int] = []
    num_levels = len(level_starts)
    for lvl in range(min(k, num_levels - 1) + 1):
        start = level_starts[lvl]
        end = level_starts[lvl + 1] if lvl + 1 < num_levels else len(order)
        if lvl > 0:
            tokens.append(SEPARATOR)
        tokens.extend(labels[v] for v in order[start:end])
    return tuple(tokens)


def tree_signature(g: Graph, root: int, k: int, c: CentralityVector | None = None) -> TreeSignature:
    """Signature of the depth-k BFS tree rooted at ``root``.

    k=0 degenerates to the bare root label.
    """
    t = build_bfs_tree(g, root, k, c)
    return TreeSignature(tokens=signature_tokens(g.labels, t.order, t.level_starts, k), depth=k)


def intern_signatures(signatures: Iterable[TreeSignature]) -> SignatureInterner:
    """Intern a dataset's signatures to ids 1..N by lexicographic order.

    All signatures must share one depth; mixing depths is rejected because
    ids from different granularity levels are not comparable.
    """
    depth: int | None = None
    distinct: set[tuple[int, ...]] = set()
    for sig in signatures:
        if depth is None:
            depth = sig.depth
        elif sig.depth != depth:
            raise ValueError(f"cannot intern signatures of mixed depths {depth} and {sig.depth}")
        distinct.add(sig.tokens)
    if depth is None:
        raise ValueError("cannot intern an empty signature collection")
    ids = {tokens: i for i, tokens in enumerate(sorted(distinct), start=1)}
    return SignatureInterner(ids=ids, depth=depth)


def super_path_pattern(
    path: Sequence[int],
    g: Graph,
    k: int,
    interner: SignatureInterner | None = None,
    c: CentralityVector | None = None,
) -> PathPattern:
    """Canonical pattern of a path with vertices replaced by depth-k tree ids.

    At k=0 a super path degenerates to the plain path, so the pattern is the
    canonicalized vertex-label sequence and no interner is consulted.
    """
    if not path:
        raise ValueError("cannot form a pattern from an empty path")
    if len(set(path)) != len(path):
        raise ValueError(f"path {tuple(path)} has repeated vertices")
    if k == 0:
        return canonical_pattern([g.labels[v] for v in path])
    if interner is None:
        raise ValueError("an interner is required for k >= 1")
    if c is None:
        c = eigenvector_centrality(g)
    ids = [interner.id_of(tree_signature(g, v, k, c)) for v in path]
    return canonical_pattern(ids)
