"""Path-pattern kernels over truncated BFS trees, at multiple granularities.

The base (level-0) kernel counts canonical root-to-vertex path patterns of
depth-d BFS trees and takes the dot product of the two count vectors. At
level i >= 1 every path vertex is replaced by the id of its depth-i BFS-tree
signature before counting, so patterns separate vertices by structural
identity instead of bare label. The full kernel sums levels 0..k; all level
kernels are PSD (each is a dot product of count vectors), hence so is the
sum.

Gram computation is two-phase. Phase 1 is per graph and embarrassingly
parallel: build all BFS forests once at depth max(d, k), enumerate paths,
and count patterns per level against a graph-local signature table. Phase 2
merges the signature tables into the dataset-global interner, rewrites the
local pattern keys, and assembles each level's Gram term as an integer
sparse product Phi @ Phi.T. Counting stays in exact integer arithmetic until
normalization, and results are independent of the worker count.
"""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .centrality import eigenvector_centrality, tie_buckets
from .graphs import Dataset, Graph
from .trees import (
    PathPattern,
    SignatureInterner,
    TreeSignature,
    _bfs,
    ordered_adjacency,
    signature_tokens,
)

# Guard for the exact int64 accumulation in the sparse Gram products.
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class TreeppParams:
    """Kernel parameters: path-tree depth d, max super-path depth k."""

    d: int
    k: int
    normalize: bool = True

    def __post_init__(self) -> None:
        if self.d < 0:
            raise ValueError(f"d must be >= 0, got {self.d}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")


@dataclass
class FeatureMap:
    """Canonical-pattern counts of one graph at one granularity level."""

    counts: dict[PathPattern, int]
    d: int
    level: int

    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric Gram matrix over a dataset.

    ``entries`` has dtype int64 while unnormalized (values are exact pattern
    count dot products) and float64 after cosine normalization.
    """

    entries: np.ndarray
    normalized: bool
    params: TreeppParams | None = None

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])


@dataclass
class GramDetails:
    """Per-phase bookkeeping from a Gram computation, for reports."""

    vocab_sizes: list[int] = field(default_factory=list)
    precompute_ms: float = 0.0
    features_ms: list[float] = field(default_factory=list)
    gram_ms: list[float] = field(default_factory=list)
    normalize_ms: float = 0.0


# ---------------------------------------------------------------------------
# Phase 1: per-graph path and signature extraction
# ---------------------------------------------------------------------------


def _graph_precompute(g: Graph, d: int, kmax: int):
    """BFS forests at depth max(d, kmax) plus all depth-d paths of one graph.

    Returns (labels, forests, paths) where forests[v] = (order, level_starts)
    of the tree rooted at v and paths holds vertex-index tuples.
    """
    c = eigenvector_centrality(g)
    oadj = ordered_adjacency(g, c)
    n = g.num_vertices
    depth = max(d, kmax)
    forests = []
    paths: list[tuple[int, ...]] = []
    for root in range(n):
        order, parent, level_starts = _bfs(oadj, n, root, depth)
        forests.append((order, level_starts))
        # Paths cover only the depth-d truncation of the tree.
        if d + 1 < len(level_starts):
            limit = level_starts[d + 1]
        else:
            limit = len(order)
        prefix: dict[int, tuple[int, ...]] = {}
        for i in range(limit):
            v = order[i]
            p = parent[i]
            prefix[v] = (v,) if p is None else prefix[p] + (v,)
            paths.append(prefix[v])
    return g.labels, forests, paths


def _count_patterns(ids, paths) -> Counter:
    counter: Counter = Counter()
    for path in paths:
        t = tuple(ids[v] for v in path)
        r = t[::-1]
        counter[t if t <= r else r] += 1
    return counter


def _local_features(pre, level: int):
    """Pattern counts of one graph at one level, keyed by graph-local ids.

    Returns (counts, local_sigs) where local_sigs is the sorted tuple of the
    graph's distinct signature token streams at this depth (None at level 0,
    where patterns are plain label sequences and already globally valid).
    """
    labels, forests, paths = pre
    if level == 0:
        return _count_patterns(labels, paths), None
    sigs = [signature_tokens(labels, order, level_starts, level) for order, level_starts in forests]
    local_sigs = sorted(set(sigs))
    local_id = {tokens: i for i, tokens in enumerate(local_sigs)}
    ids = [local_id[s] for s in sigs]
    return _count_patterns(ids, paths), local_sigs


def _phase1(args):
    g, d, kmax = args
    pre = _graph_precompute(g, d, kmax)
    out = []
    timings = []
    for level in range(kmax + 1):
        t0 = time.perf_counter()
        out.append(_local_features(pre, level))
        timings.append((time.perf_counter() - t0) * 1000.0)
    return out, timings


# ---------------------------------------------------------------------------
# Phase 2: deterministic merge and Gram assembly
# ---------------------------------------------------------------------------


def _level_gram(per_graph, level: int):
    """Merge one level's per-graph counts and return (K_level, vocab_size).

    Local signature ids are rewritten through the dataset-global interner
    (sorted distinct signatures) and patterns re-canonicalized under the
    global ids, so the result is identical no matter how phase 1 was split.
    """
    n = len(per_graph)
    if level == 0:
        global_counts = [counts for counts, _ in per_graph]
    else:
        all_sigs = sorted(set().union(*(local_sigs for _, local_sigs in per_graph)))
        global_id = {tokens: i for i, tokens in enumerate(all_sigs, start=1)}
        global_counts = []
        for counts, local_sigs in per_graph:
            remap = [global_id[tokens] for tokens in local_sigs]
            merged: dict[tuple[int, ...], int] = {}
            for t, cnt in counts.items():
                tg = tuple(remap[x] for x in t)
                rg = tg[::-1]
                key = tg if tg <= rg else rg
                merged[key] = merged.get(key, 0) + cnt
            global_counts.append(merged)

    vocab: dict[PathPattern, int] = {}
    for counts in global_counts:
        for key in counts:
            if key not in vocab:
                vocab[key] = 0
    for col, key in enumerate(sorted(vocab)):
        vocab[key] = col

    indptr = np.zeros(n + 1, dtype=np.int64)
    cols: list[int] = []
    data: list[int] = []
    for i, counts in enumerate(global_counts):
        row = sorted((vocab[key], cnt) for key, cnt in counts.items())
        cols.extend(c for c, _ in row)
        data.extend(v for _, v in row)
        indptr[i + 1] = len(cols)
    phi = sp.csr_matrix(
        (np.asarray(data, dtype=np.int64), np.asarray(cols, dtype=np.int64), indptr),
        shape=(n, len(vocab)),
    )
    return np.asarray((phi @ phi.T).todense(), dtype=np.int64), len(vocab)


def _treepp_gram(ds: Dataset, p: TreeppParams, threads: int = 1) -> tuple[KernelMatrix, GramDetails]:
    if len(ds) == 0:
        raise ValueError("cannot compute a kernel matrix over an empty dataset")
    for i, g in enumerate(ds.graphs):
        if g.num_vertices == 0:
            raise ValueError(f"graph {i} has no vertices")

    details = GramDetails()
    n = len(ds)
    t0 = time.perf_counter()
    jobs = [(g, p.d, p.k) for g in ds.graphs]
    if threads > 1 and n >= 4:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_phase1, jobs, chunksize=max(1, n // (4 * threads))))
    else:
        results = [_phase1(job) for job in jobs]
    details.precompute_ms = (time.perf_counter() - t0) * 1000.0

    per_level_ms = [0.0] * (p.k + 1)
    for _, timings in results:
        for level, ms in enumerate(timings):
            per_level_ms[level] += ms
    details.features_ms = per_level_ms

    max_paths = max(feat[0][0].total() if False else sum(feat[0][0].values()) for feat, _ in results)
    if (p.k + 1) * max_paths * max_paths >= _INT64_SAFE:
        raise OverflowError(
            f"pattern counts too large for exact int64 accumulation (max paths per graph {max_paths})"
        )

    K = np.zeros((n, n), dtype=np.int64)
    for level in range(p.k + 1):
        t0 = time.perf_counter()
        K_level, vocab_size = _level_gram([feat[level] for feat, _ in results], level)
        K += K_level
        details.gram_ms.append((time.perf_counter() - t0) * 1000.0)
        details.vocab_sizes.append(vocab_size)

    matrix = KernelMatrix(entries=K, normalized=False, params=p)
    if p.normalize:
        t0 = time.perf_counter()
        matrix = normalize_matrix(matrix)
        details.normalize_ms = (time.perf_counter() - t0) * 1000.0
    return matrix, details


def treepp_kernel_matrix(ds: Dataset, p: TreeppParams, threads: int = 1) -> KernelMatrix:
    """Full multi-granularity kernel matrix: sum of level kernels 0..k.

    Each level uses a fresh dataset-global signature interner at that depth.
    Deterministic for fixed inputs, independently of ``threads``.
    """
    matrix, _ = _treepp_gram(ds, p, threads)
    return matrix


# ---------------------------------------------------------------------------
# Public per-graph features and level kernel
# ---------------------------------------------------------------------------


def extract_features(
    g: Graph,
    d: int,
    level: int,
    interner: SignatureInterner | None = None,
    centrality=None,
) -> FeatureMap:
    """Canonical pattern counts of one graph at one granularity level.

    Every vertex of ``g`` contributes the depth-d BFS tree rooted at it; each
    root-to-vertex path is mapped through depth-``level`` signature ids (the
    plain labels at level 0) and counted in canonical orientation. The
    interner must come from the enclosing dataset at the same depth.
    """
    if level > 0:
        if interner is None:
            raise ValueError("an interner is required for level >= 1")
        if interner.depth != level:
            raise ValueError(f"interner depth {interner.depth} does not match level {level}")
    if centrality is None:
        centrality = eigenvector_centrality(g)
    labels, forests, paths = _graph_precompute_with(g, d, level, centrality)
    if level == 0:
        ids = list(labels)
    else:
        ids = []
        for order, level_starts in forests:
            tokens = signature_tokens(labels, order, level_starts, level)
            sig = TreeSignature(tokens=tokens, depth=level)
            ids.append(interner.id_of(sig))
    return FeatureMap(counts=dict(_count_patterns(ids, paths)), d=d, level=level)


def _graph_precompute_with(g: Graph, d: int, kmax: int, c):
    """_graph_precompute with a caller-supplied centrality vector."""
    oadj = ordered_adjacency(g, c)
    n = g.num_vertices
    depth = max(d, kmax)
    forests = []
    paths: list[tuple[int, ...]] = []
    for root in range(n):
        order, parent, level_starts = _bfs(oadj, n, root, depth)
        forests.append((order, level_starts))
        limit = level_starts[d + 1] if d + 1 < len(level_starts) else len(order)
        prefix: dict[int, tuple[int, ...]] = {}
        for i in range(limit):
            v = order[i]
            p = parent[i]
            prefix[v] = (v,) if p is None else prefix[p] + (v,)
            paths.append(prefix[v])
    return g.labels, forests, paths


def dataset_interner(ds: Dataset, level: int) -> SignatureInterner:
    """Interner over all depth-``level`` tree signatures of a dataset."""
    sigs = []
    for g in ds.graphs:
        c = eigenvector_centrality(g)
        oadj = ordered_adjacency(g, c)
        for root in range(g.num_vertices):
            order, _, level_starts = _bfs(oadj, g.num_vertices, root, level)
            sigs.append(
                TreeSignature(tokens=signature_tokens(g.labels, order, level_starts, level), depth=level)
            )
    from .trees import intern_signatures

    return intern_signatures(sigs)


def kernel_level(f1: FeatureMap, f2: FeatureMap) -> int:
    """Dot product of two feature maps over their shared patterns."""
    if (f1.d, f1.level) != (f2.d, f2.level):
        raise ValueError(
            f"feature maps disagree on provenance: (d={f1.d}, level={f1.level}) "
            f"vs (d={f2.d}, level={f2.level})"
        )
    small, big = (f1, f2) if len(f1.counts) <= len(f2.counts) else (f2, f1)
    return sum(cnt * big.counts.get(pat, 0) for pat, cnt in small.counts.items())


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def normalize_matrix(m: KernelMatrix) -> KernelMatrix:
    """Cosine-normalize: K(i,j) / sqrt(K(i,i) K(j,j)), diagonal exactly 1."""
    K = np.asarray(m.entries, dtype=np.float64)
    diag = np.diag(K).copy()
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"graph {i} has non-positive self-similarity {diag[i]}; cannot normalize")
    inv = 1.0 / np.sqrt(diag)
    out = K * inv[:, None] * inv[None, :]
    # Rebuild from the upper triangle so K(i,j) == K(j,i) bit-for-bit.
    out = np.triu(out, 1)
    out = out + out.T
    np.fill_diagonal(out, 1.0)
    return KernelMatrix(entries=out, normalized=True, params=m.params)


# ---------------------------------------------------------------------------
# Weisfeiler-Lehman subtree baseline
# ---------------------------------------------------------------------------


def wl_subtree_kernel_matrix(ds: Dataset, h: int) -> KernelMatrix:
    """Weisfeiler-Lehman subtree kernel with h refinement iterations.

    Iteration 0 compares raw label histograms; each following iteration
    relabels every vertex by (own label, sorted neighbor labels) through a
    dataset-global table and adds the new histogram dot products.
    """
    if h < 0:
        raise ValueError(f"h must be >= 0, got {h}")
    if len(ds) == 0:
        raise ValueError("cannot compute a kernel matrix over an empty dataset")
    n = len(ds)
    K = np.zeros((n, n), dtype=np.int64)
    cur = [list(g.labels) for g in ds.graphs]
    for it in range(h + 1):
        if it > 0:
            table: dict[tuple, int] = {}
            nxt = []
            for g, lab in zip(ds.graphs, cur):
                new = []
                for v in range(g.num_vertices):
                    key = (lab[v], tuple(sorted(lab[w] for w in g.adjacency[v])))
                    nid = table.setdefault(key, len(table) + 1)
                    new.append(nid)
                nxt.append(new)
            cur = nxt
        histograms = [Counter(lab) for lab in cur]
        vocab: dict[int, int] = {}
        for hist in histograms:
            for key in hist:
                if key not in vocab:
                    vocab[key] = len(vocab)
        indptr = np.zeros(n + 1, dtype=np.int64)
        cols: list[int] = []
        data: list[int] = []
        for i, hist in enumerate(histograms):
            row = sorted((vocab[key], cnt) for key, cnt in hist.items())
            cols.extend(c for c, _ in row)
            data.extend(v for _, v in row)
            indptr[i + 1] = len(cols)
        phi = sp.csr_matrix(
            (np.asarray(data, dtype=np.int64), np.asarray(cols, dtype=np.int64), indptr),
            shape=(n, len(vocab)),
        )
        K += np.asarray((phi @ phi.T).todense(), dtype=np.int64)
    return KernelMatrix(entries=K, normalized=False, params=None)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def oracle_kernel(g1: Graph, g2: Graph, p: TreeppParams) -> int:
    """Recompute the unnormalized kernel of a pair by brute force.

    Independent of the production pipeline: trees are rebuilt from scratch
    for every root and level, signatures stay explicit strings, and counting
    happens in plain dicts with Python integers. Only usable on small graphs.
    """
    for g in (g1, g2):
        if g.num_vertices > 12:
            raise ValueError(f"oracle size guard exceeded: {g.num_vertices} vertices > 12")
        if g.num_vertices == 0:
            raise ValueError("oracle requires non-empty graphs")
    total = 0
    for level in range(p.k + 1):
        c1 = _oracle_level_counts(g1, p.d, level)
        c2 = _oracle_level_counts(g2, p.d, level)
        total += sum(cnt * c2.get(key, 0) for key, cnt in c1.items())
    return total


def _oracle_bfs(g: Graph, buckets, root: int, depth: int):
    visited = {root}
    levels = [[root]]
    parent: dict[int, int | None] = {root: None}
    for _ in range(depth):
        frontier: list[int] = []
        for v in levels[-1]:
            nxt = sorted(
                (w for w in g.adjacency[v] if w not in visited),
                key=lambda w: (g.labels[w], buckets[w], w),
            )
            for w in nxt:
                visited.add(w)
                parent[w] = v
                frontier.append(w)
        if not frontier:
            break
        levels.append(frontier)
    return levels, parent


def _oracle_level_counts(g: Graph, d: int, level: int) -> dict[tuple[str, ...], int]:
    cv = eigenvector_centrality(g)
    buckets = tie_buckets(cv.scores)

    def sig_string(root: int) -> str:
        levels, _ = _oracle_bfs(g, buckets, root, level)
        return "|".join(",".join(str(g.labels[v]) for v in lvl) for lvl in levels)

    sigs = [sig_string(v) for v in range(g.num_vertices)]
    counts: dict[tuple[str, ...], int] = {}
    for root in range(g.num_vertices):
        levels, parent = _oracle_bfs(g, buckets, root, d)
        for lvl in levels:
            for v in lvl:
                chain = []
                u: int | None = v
                while u is not None:
                    chain.append(u)
                    u = parent[u]
                chain.reverse()
                seq = tuple(sigs[w] for w in chain)
                rev = seq[::-1]
                key = seq if seq <= rev else rev
                counts[key] = counts.get(key, 0) + 1
    return counts
