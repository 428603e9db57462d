"""Agglomerative clustering with landmark sampling.

A large set is split into at most ``c_max`` clusters by (1) drawing a
seeded uniform sample of landmark records, (2) embedding every element as
its vector of weighted Hamming distances to the landmarks, and (3) running
Euclidean single linkage in the embedding space with a 'maxclust' cut.
Clusters produced this way carry no goodness guarantee.

Exactly ``n_landmarks * m`` pairwise Hamming evaluations are performed,
which is the advertised complexity reduction over the full m x m matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import int32, njit

from .agglo import (
    PROVENANCE_SAMPLE,
    Clustering,
    cut_maxclust,
    linkage_from_edges,
)
from .distance import DistanceParams, distance_matrix
from .schema import Dataset

__all__ = ["SampleParams", "sample_clust", "count_distance_computations", "n_landmarks"]


@dataclass(frozen=True)
class SampleParams:
    """Sampling knobs: sample-size factor, maxclust divisor and RNG seed."""

    rho_s: float = 0.5
    rho_mc: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if self.rho_s <= 0:
            raise ValueError("rho_s must be positive")
        if self.rho_mc <= 1:
            raise ValueError("rho_mc must be > 1")


def n_landmarks(m: int, rho_s: float) -> int:
    """Sample size: round-half-up of rho_s * sqrt(m), clamped to [1, m]."""
    raw = int(np.floor(rho_s * np.sqrt(m) + 0.5))
    return max(1, min(m, raw))


def count_distance_computations(m: int, p: SampleParams) -> int:
    """Pairwise Hamming evaluations sample_clust performs on m elements."""
    if m < 2:
        raise ValueError("need at least two elements")
    return n_landmarks(m, p.rho_s) * m


@njit(cache=True)
def _prim_points(X):  # pragma: no cover - compiled
    """MST over row vectors of X under squared Euclidean distance.

    The candidate rows are kept compacted behind the growing tree prefix
    (rows are swapped into place as they join the tree), so each pass only
    touches live data.  Returns (parents, children, weights) in original
    row ids, weights already square-rooted.
    """
    u, dim = X.shape
    X = X.copy()
    perm = np.arange(u)
    best = np.full(u, np.inf)
    parent = np.empty(u, dtype=np.int64)
    ea = np.empty(u - 1, dtype=np.int64)
    eb = np.empty(u - 1, dtype=np.int64)
    ew = np.empty(u - 1, dtype=np.float64)
    for step in range(u - 1):
        cur = step
        bestpos = step + 1
        bestval = np.inf
        for j in range(step + 1, u):
            acc = 0.0
            for k in range(dim):
                diff = X[cur, k] - X[j, k]
                acc += diff * diff
            if acc < best[j]:
                best[j] = acc
                parent[j] = perm[cur]
            if best[j] < bestval:
                bestval = best[j]
                bestpos = j
        ea[step] = parent[bestpos]
        eb[step] = perm[bestpos]
        ew[step] = np.sqrt(bestval)
        nxt = step + 1
        if bestpos != nxt:
            for k in range(dim):
                tmp = X[nxt, k]
                X[nxt, k] = X[bestpos, k]
                X[bestpos, k] = tmp
            best[bestpos] = best[nxt]
            parent[bestpos] = parent[nxt]
            perm[nxt], perm[bestpos] = perm[bestpos], perm[nxt]
    return ea, eb, ew


@njit(cache=True)
def _prim_counts(X, scale):  # pragma: no cover - compiled
    """Integer specialization of :func:`_prim_points`.

    X holds small nonnegative integers (mismatch counts to each landmark),
    so squared distances are exact integers that fit 32 bits; ``scale``
    converts them back to weighted-Hamming units.  Ties are exact here,
    unlike the float path where rounding can reorder equal merges.
    """
    u, dim = X.shape
    X = X.copy()
    perm = np.arange(u)
    huge = np.int32(1) << 30
    best = np.full(u, huge, dtype=np.int32)
    parent = np.empty(u, dtype=np.int64)
    cur = np.empty(dim, dtype=np.int16)
    ea = np.empty(u - 1, dtype=np.int64)
    eb = np.empty(u - 1, dtype=np.int64)
    ew = np.empty(u - 1, dtype=np.float64)
    for step in range(u - 1):
        for k in range(dim):
            cur[k] = X[step, k]
        lo = step + 1
        # Four candidate rows per pass with explicitly 32-bit accumulators:
        # the independent chains hide the reduction latency and keep the
        # arithmetic in 8-lane vectors instead of promoted 64-bit ones.
        nblock = (u - lo) & ~3
        j = lo
        while j < lo + nblock:
            a0 = int32(0)
            a1 = int32(0)
            a2 = int32(0)
            a3 = int32(0)
            for k in range(dim):
                c = int32(cur[k])
                d0 = int32(c - int32(X[j, k]))
                d1 = int32(c - int32(X[j + 1, k]))
                d2 = int32(c - int32(X[j + 2, k]))
                d3 = int32(c - int32(X[j + 3, k]))
                a0 = int32(a0 + int32(d0 * d0))
                a1 = int32(a1 + int32(d1 * d1))
                a2 = int32(a2 + int32(d2 * d2))
                a3 = int32(a3 + int32(d3 * d3))
            if a0 < best[j]:
                best[j] = a0
                parent[j] = perm[step]
            if a1 < best[j + 1]:
                best[j + 1] = a1
                parent[j + 1] = perm[step]
            if a2 < best[j + 2]:
                best[j + 2] = a2
                parent[j + 2] = perm[step]
            if a3 < best[j + 3]:
                best[j + 3] = a3
                parent[j + 3] = perm[step]
            j += 4
        for j in range(lo + nblock, u):
            acc = int32(0)
            for k in range(dim):
                diff = int32(cur[k]) - int32(X[j, k])
                acc = int32(acc + int32(diff * diff))
            if acc < best[j]:
                best[j] = acc
                parent[j] = perm[step]
        bestpos = lo
        bestval = best[lo]
        for j in range(lo + 1, u):
            if best[j] < bestval:
                bestval = best[j]
                bestpos = j
        ea[step] = parent[bestpos]
        eb[step] = perm[bestpos]
        ew[step] = np.sqrt(np.float64(bestval)) * scale
        nxt = lo
        if bestpos != nxt:
            for k in range(dim):
                tmp = X[nxt, k]
                X[nxt, k] = X[bestpos, k]
                X[bestpos, k] = tmp
            best[bestpos] = best[nxt]
            parent[bestpos] = parent[nxt]
            perm[nxt], perm[bestpos] = perm[bestpos], perm[nxt]
    return ea, eb, ew


def _embedding_linkage(emb: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Single-linkage matrix over embedding rows.

    Rows with identical embeddings are collapsed before the MST (they merge
    at distance zero anyway), which keeps the Prim pass proportional to the
    number of distinct embeddings.  When ``scale`` is given, ``emb`` holds
    integer mismatch counts and the exact integer kernel is used.
    """
    m = emb.shape[0]
    uniq, inverse = np.unique(emb, axis=0, return_inverse=True)
    u = uniq.shape[0]
    # Representative element per distinct embedding: smallest original index.
    rep = np.full(u, m, dtype=np.intp)
    np.minimum.at(rep, inverse, np.arange(m, dtype=np.intp))

    edges: list[tuple[int, int, float]] = []
    members: dict[int, list[int]] = {}
    for i, g in enumerate(inverse):
        members.setdefault(int(g), []).append(i)
    for g, idx in members.items():
        first = idx[0]
        for other in idx[1:]:
            edges.append((first, other, 0.0))
    if u >= 2:
        contig = np.ascontiguousarray(uniq)
        if scale is not None:
            ea, eb, ew = _prim_counts(contig, float(scale))
        else:
            ea, eb, ew = _prim_points(contig)
        for a, b, w in zip(ea, eb, ew):
            edges.append((int(rep[a]), int(rep[b]), float(w)))
    return linkage_from_edges(m, edges)


def sample_clust(
    c: Sequence[int],
    data: Dataset,
    dist: DistanceParams,
    p: SampleParams,
) -> Clustering:
    """Split the records indexed by ``c`` into at most ``floor(m/rho_mc)``
    clusters using landmark sampling; see the module docstring."""
    c = list(c)
    m = len(c)
    if m < 2:
        raise ValueError("sample_clust needs at least two elements")
    n = n_landmarks(m, p.rho_s)
    c_max = max(1, int(np.floor(m / p.rho_mc)))

    rng = np.random.default_rng(p.seed)
    landmark_pos = rng.choice(m, size=n, replace=False)
    landmarks = [c[i] for i in landmark_pos]

    # n x m weighted-Hamming matrix; its transpose is the landmark embedding.
    D = distance_matrix(
        landmarks,
        c,
        data,
        dist.weights,
        null_policy=dist.null_policy,
        normalized=dist.normalized,
        n_jobs=dist.n_jobs,
        cell_budget=dist.cell_budget,
    )
    w = dist.weights
    d = data.schema.d
    uniform = w.size > 0 and w[0] > 0 and bool(np.all(w == w[0]))
    # The integer kernel accumulates squared count differences in 32 bits.
    if uniform and n * d * d < 2**30 and d < 2**15:
        # Uniform weights make each embedding coordinate a scaled mismatch
        # count; the integer kernel is exact and much faster.
        denom = float(np.sum(w)) if dist.normalized else float(d)
        emb = np.rint(D.T * (denom / w[0])).astype(np.int16)
        lm = _embedding_linkage(emb, scale=float(w[0]) / denom)
    else:
        lm = _embedding_linkage(np.ascontiguousarray(D.T))
    local = cut_maxclust(lm, c_max, PROVENANCE_SAMPLE)
    return Clustering.build(
        [[c[i] for i in cl] for cl in local.clusters], PROVENANCE_SAMPLE
    )
