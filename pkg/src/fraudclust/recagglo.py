"""Recursive driver combining landmark sampling and agglomerative clustering.

Large clusters are split with sampling and recursed on; small ones go
straight to agglomerative clustering.  Every non-singleton cluster in the
final result meets the goodness criterion: its internal single-linkage
merge distances stay at or below ``d_max``.

When sampling fails to split a large cluster, it is retried once with
``rho_mc = 1.01``; the lowered value is scoped to that cluster's recursive
call and does not leak to siblings or to the remain phase.  If the retry
also fails, clusters below ``4 * delta_a`` fall back to plain agglomerative
clustering and larger ones are pushed to the remain set.  The remain set is
processed exactly once after the main loop; if its split fails, its
elements become singletons.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .agglo import (
    PROVENANCE_SINGLETON,
    Clustering,
    agglo_clust,
    linkage,
)
from .distance import DistanceParams, distance_matrix
from .sample import SampleParams, sample_clust
from .schema import Dataset

__all__ = ["RecAggloParams", "RecursionGuardError", "rec_agglo", "goodness_check"]


class RecursionGuardError(RuntimeError):
    """Recursion exceeded the configured safety limit."""

    def __init__(self, depth: int, subset_size: int):
        super().__init__(
            f"recursion depth {depth} exceeded on a subset of {subset_size} elements; "
            "the input may be pathological for the configured parameters"
        )
        self.depth = depth
        self.subset_size = subset_size


@dataclass(frozen=True)
class RecAggloParams:
    """Driver parameters; defaults follow the published tuning."""

    delta_a: int = 1000
    d_max: float = 0.5
    rho_s: float = 0.5
    rho_mc: float = 6.0
    seed: int = 0
    max_recursion_guard: int = 64

    def __post_init__(self):
        if self.delta_a < 2:
            raise ValueError("delta_a must be >= 2")
        if self.d_max < 0:
            raise ValueError("d_max must be nonnegative")


def _child_seed(seed: int, *salt: int) -> int:
    # Deterministic per-subtree seeds so parallel execution cannot reorder
    # RNG draws.
    return int(np.random.SeedSequence((seed & 0xFFFFFFFF, *salt)).generate_state(1)[0])


def rec_agglo(
    C: Clustering,
    data: Dataset,
    dist: DistanceParams,
    p: RecAggloParams,
) -> Clustering:
    """Recursively cluster the partition ``C`` (initially one cluster holding
    the whole working set)."""
    clusters, provenance = _rec_agglo(C, data, dist, p, p.rho_mc, p.seed, 0)
    return Clustering.build(clusters, provenance)


def _sample_params(p: RecAggloParams, rho_mc: float, seed: int) -> SampleParams:
    return SampleParams(rho_s=p.rho_s, rho_mc=rho_mc, seed=seed)


def _rec_agglo(
    C: Clustering,
    data: Dataset,
    dist: DistanceParams,
    p: RecAggloParams,
    rho_mc: float,
    seed: int,
    depth: int,
):
    if depth > p.max_recursion_guard:
        raise RecursionGuardError(depth, sum(len(c) for c in C.clusters))
    dist = replace(dist, d_max=p.d_max)
    max_s = 4 * p.delta_a
    res_clusters: list[tuple[int, ...]] = []
    res_prov: list[str] = []
    remain: list[int] = []

    def absorb(cl: Clustering):
        res_clusters.extend(cl.clusters)
        res_prov.extend(cl.provenance)

    for ordinal, c in enumerate(C.clusters):
        if len(c) > p.delta_a:
            split_seed = _child_seed(seed, depth, ordinal, 0)
            cs = sample_clust(c, data, dist, _sample_params(p, rho_mc, split_seed))
            if cs.n_clusters > 1:
                absorb(
                    Clustering.build(
                        *_rec_agglo(
                            cs, data, dist, p, rho_mc,
                            _child_seed(seed, depth, ordinal, 1), depth + 1,
                        )
                    )
                )
                continue
            if rho_mc > 1.01:
                retry_seed = _child_seed(seed, depth, ordinal, 2)
                cs = sample_clust(c, data, dist, _sample_params(p, 1.01, retry_seed))
                if cs.n_clusters > 1:
                    absorb(
                        Clustering.build(
                            *_rec_agglo(
                                cs, data, dist, p, 1.01,
                                _child_seed(seed, depth, ordinal, 3), depth + 1,
                            )
                        )
                    )
                    continue
            if len(c) < max_s:
                absorb(agglo_clust(c, data, dist))
            else:
                remain.extend(c)
        elif len(c) > 1:
            absorb(agglo_clust(c, data, dist))
        else:
            remain.extend(c)

    # Remain phase: one pass, caller's rho_mc, no alternative measures.
    if len(remain) > p.delta_a:
        remain_seed = _child_seed(seed, depth, len(C.clusters), 4)
        cs = sample_clust(remain, data, dist, _sample_params(p, rho_mc, remain_seed))
        if cs.n_clusters > 1:
            absorb(
                Clustering.build(
                    *_rec_agglo(
                        cs, data, dist, p, rho_mc,
                        _child_seed(seed, depth, len(C.clusters), 5), depth + 1,
                    )
                )
            )
        else:
            for i in remain:
                res_clusters.append((i,))
                res_prov.append(PROVENANCE_SINGLETON)
    elif len(remain) > 1:
        absorb(agglo_clust(remain, data, dist))
    elif len(remain) == 1:
        res_clusters.append((remain[0],))
        res_prov.append(PROVENANCE_SINGLETON)

    return res_clusters, res_prov


def goodness_check(
    cl: Clustering,
    data: Dataset,
    dist: DistanceParams,
    d_max: float,
) -> tuple[bool, list[tuple[int, float]]]:
    """Verify every non-singleton cluster's single-linkage merges stay
    within ``d_max``.

    Returns (ok, violations) where each violation is
    (cluster ordinal, offending final merge distance).
    """
    violations = []
    for k, c in enumerate(cl.clusters):
        if len(c) < 2:
            continue
        D = distance_matrix(
            list(c),
            list(c),
            data,
            dist.weights,
            null_policy=dist.null_policy,
            normalized=dist.normalized,
            n_jobs=dist.n_jobs,
            cell_budget=dist.cell_budget,
        )
        lm = linkage(D, "single")
        top = float(lm[-1, 2])
        if top > d_max:
            violations.append((k, top))
    return (not violations, violations)
