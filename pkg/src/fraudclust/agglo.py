"""Plain agglomerative clustering: linkage construction and dendrogram cuts.

Single linkage is computed from the minimum spanning tree of the distance
matrix (Prim), which matches the classic merge sequence in O(m^2) time.
Complete linkage uses an active-matrix Lance-Williams update.  Equal-distance
merge candidates resolve deterministically (smallest index pair), so results
are reproducible; exact agreement with other tools is only guaranteed on
tie-free inputs.

Linkage matrices follow the usual convention: original elements are nodes
``0..m-1`` and merge ``i`` creates node ``m+i``.  Each row of the ``(m-1, 4)``
array is ``(left_node, right_node, merge_distance, new_size)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distance import DistanceParams, distance_matrix
from .schema import Dataset

__all__ = [
    "Clustering",
    "linkage",
    "cut_distance",
    "cut_maxclust",
    "agglo_clust",
    "mst_from_matrix",
    "linkage_from_edges",
]

PROVENANCE_AGGLO = "agglo"
PROVENANCE_SAMPLE = "sample"
PROVENANCE_SINGLETON = "recagglo-singleton"


@dataclass(frozen=True)
class Clustering:
    """A partition of record indices into clusters, with provenance tags."""

    clusters: tuple[tuple[int, ...], ...]
    provenance: tuple[str, ...]

    def __post_init__(self):
        if len(self.clusters) != len(self.provenance):
            raise ValueError("one provenance tag per cluster required")
        if any(len(c) == 0 for c in self.clusters):
            raise ValueError("empty cluster not allowed")

    @classmethod
    def build(cls, clusters: Iterable[Sequence[int]], provenance) -> "Clustering":
        """Canonicalize: members sorted ascending, clusters by smallest member."""
        cl = [tuple(sorted(c)) for c in clusters]
        if isinstance(provenance, str):
            prov = [provenance] * len(cl)
        else:
            prov = list(provenance)
        order = sorted(range(len(cl)), key=lambda k: cl[k][0] if cl[k] else -1)
        return cls(tuple(cl[k] for k in order), tuple(prov[k] for k in order))

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def members(self) -> list[int]:
        return [i for c in self.clusters for i in c]

    def assert_partition_of(self, indices: Iterable[int]) -> None:
        got = sorted(self.members())
        expected = sorted(indices)
        if got != expected:
            raise ValueError("clustering is not a partition of the given indices")

    def assignment(self) -> dict[int, int]:
        """Map record index -> cluster ordinal."""
        out = {}
        for k, c in enumerate(self.clusters):
            for i in c:
                out[i] = k
        return out


def mst_from_matrix(D: np.ndarray) -> list[tuple[int, int, float]]:
    """Minimum spanning tree edges of a symmetric distance matrix (Prim)."""
    m = D.shape[0]
    if m < 2:
        return []
    in_tree = np.zeros(m, dtype=bool)
    in_tree[0] = True
    best = D[0].copy()
    parent = np.zeros(m, dtype=np.intp)
    edges = []
    for _ in range(m - 1):
        masked = np.where(in_tree, np.inf, best)
        j = int(np.argmin(masked))
        edges.append((int(parent[j]), j, float(best[j])))
        in_tree[j] = True
        improved = D[j] < best
        best = np.where(improved, D[j], best)
        parent = np.where(improved, j, parent)
    return edges


def linkage_from_edges(m: int, edges: list[tuple[int, int, float]]) -> np.ndarray:
    """Build a linkage matrix from m-1 spanning-tree edges.

    Edges are applied in nondecreasing weight order (ties: smallest original
    index pair first), which reproduces the single-linkage merge sequence.
    """
    if len(edges) != m - 1:
        raise ValueError("spanning tree must have exactly m-1 edges")
    ordered = sorted(
        ((w, min(a, b), max(a, b)) for a, b, w in edges), key=lambda e: e
    )
    parent = np.arange(m, dtype=np.intp)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    node_id = np.arange(m, dtype=np.int64)
    size = np.ones(m, dtype=np.int64)
    out = np.empty((m - 1, 4), dtype=np.float64)
    for step, (w, a, b) in enumerate(ordered):
        ra, rb = find(a), find(b)
        if ra == rb:
            raise ValueError("edges do not form a spanning tree")
        left, right = sorted((int(node_id[ra]), int(node_id[rb])))
        new_size = size[ra] + size[rb]
        out[step] = (left, right, w, new_size)
        parent[rb] = ra
        node_id[ra] = m + step
        size[ra] = new_size
    return out


def _complete_linkage(D: np.ndarray) -> np.ndarray:
    m = D.shape[0]
    A = D.astype(np.float64, copy=True)
    np.fill_diagonal(A, np.inf)
    active = np.ones(m, dtype=bool)
    node_id = np.arange(m, dtype=np.int64)
    size = np.ones(m, dtype=np.int64)
    out = np.empty((m - 1, 4), dtype=np.float64)
    for step in range(m - 1):
        flat = int(np.argmin(A))
        i, j = divmod(flat, m)
        if i > j:
            i, j = j, i
        dist = float(A[i, j])
        left, right = sorted((int(node_id[i]), int(node_id[j])))
        out[step] = (left, right, dist, size[i] + size[j])
        merged = np.maximum(A[i], A[j])
        A[i, :] = merged
        A[:, i] = merged
        A[i, i] = np.inf
        A[j, :] = np.inf
        A[:, j] = np.inf
        active[j] = False
        node_id[i] = m + step
        size[i] += size[j]
    return out


def linkage(D: np.ndarray, method: str = "single") -> np.ndarray:
    """Hierarchical-agglomerative merge sequence for a square distance matrix."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    if method == "single":
        return linkage_from_edges(D.shape[0], mst_from_matrix(D))
    if method == "complete":
        return _complete_linkage(D)
    raise ValueError(f"unknown linkage method {method!r}")


def _components(m: int, lm: np.ndarray, n_merges: int) -> list[list[int]]:
    parent = np.arange(m + n_merges, dtype=np.intp)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for step in range(n_merges):
        left, right = int(lm[step, 0]), int(lm[step, 1])
        parent[find(left)] = find(m + step)
        parent[find(right)] = find(m + step)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def cut_distance(lm: np.ndarray, d_max: float, provenance: str = PROVENANCE_AGGLO) -> Clustering:
    """Dendrogram components after removing all merges above ``d_max``."""
    if d_max < 0:
        raise ValueError("d_max must be nonnegative")
    m = lm.shape[0] + 1
    n_merges = int(np.searchsorted(lm[:, 2], d_max, side="right"))
    return Clustering.build(_components(m, lm, n_merges), provenance)


def cut_maxclust(lm: np.ndarray, c_max: int, provenance: str = PROVENANCE_AGGLO) -> Clustering:
    """Smallest cut height yielding at most ``c_max`` clusters.

    Ties are never split: all merges at the chosen height apply, so the
    result can have fewer than ``c_max`` clusters.
    """
    if c_max < 1:
        raise ValueError("c_max must be >= 1")
    m = lm.shape[0] + 1
    if m <= c_max:
        return Clustering.build([[i] for i in range(m)], provenance)
    # After k merges there are m-k clusters; need k >= m - c_max, extended
    # to the end of the tie group at that height.
    k = m - c_max
    height = lm[k - 1, 2]
    n_merges = int(np.searchsorted(lm[:, 2], height, side="right"))
    return Clustering.build(_components(m, lm, n_merges), provenance)


def agglo_clust(c: Sequence[int], data: Dataset, params: DistanceParams) -> Clustering:
    """Agglomerative clustering of the records indexed by ``c``.

    Composition of distance matrix, linkage and a 'distance' cut at
    ``params.d_max``; every non-singleton result cluster therefore meets the
    goodness criterion.
    """
    c = list(c)
    if len(c) < 1:
        raise ValueError("need at least one element")
    if len(c) == 1:
        return Clustering.build([[c[0]]], PROVENANCE_AGGLO)
    D = distance_matrix(
        c,
        c,
        data,
        params.weights,
        null_policy=params.null_policy,
        normalized=params.normalized,
        n_jobs=params.n_jobs,
        cell_budget=params.cell_budget,
    )
    lm = linkage(D, params.linkage)
    local = cut_distance(lm, params.d_max)
    return Clustering.build(
        [[c[i] for i in cl] for cl in local.clusters], PROVENANCE_AGGLO
    )
