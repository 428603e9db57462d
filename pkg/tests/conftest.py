"""Shared fixtures and independent reference implementations.

The reference (oracle) functions here are deliberately naive and written
without reusing package internals, so agreement between the two is a real
cross-check rather than a tautology.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from fraudclust.schema import (
    AttributeCategory,
    AttributeSchema,
    Dataset,
    Label,
    Record,
)

CATEGORY_CYCLE = list(AttributeCategory)


def toy_schema(d: int, prefix: str = "a") -> AttributeSchema:
    """A d-attribute schema cycling through the five categories."""
    attrs = tuple(
        (f"{prefix}{j}", CATEGORY_CYCLE[j % len(CATEGORY_CYCLE)]) for j in range(d)
    )
    return AttributeSchema(attrs)


def make_dataset(
    rows,
    labels=None,
    schema: AttributeSchema | None = None,
    timestamps=None,
) -> Dataset:
    """Dataset from a list of value tuples (strings or None)."""
    rows = [tuple(r) for r in rows]
    d = len(rows[0]) if rows else 0
    if schema is None:
        schema = toy_schema(d)
    if labels is None:
        labels = [Label.UNLABELED] * len(rows)
    if timestamps is None:
        timestamps = [float(i) for i in range(len(rows))]
    records = tuple(
        Record(f"r{i:04d}", float(timestamps[i]), labels[i], rows[i])
        for i in range(len(rows))
    )
    return Dataset(schema, records)


def random_dataset(
    rng: np.random.Generator,
    m: int,
    d: int,
    alphabet: int = 4,
    labels=None,
) -> Dataset:
    values = rng.integers(0, alphabet, size=(m, d))
    rows = [tuple(f"v{values[i, j]}" for j in range(d)) for i in range(m)]
    return make_dataset(rows, labels=labels, schema=toy_schema(d))


def random_labels(rng: np.random.Generator, m: int, p_unlabeled: float = 0.0):
    out = []
    for _ in range(m):
        r = rng.random()
        if r < p_unlabeled:
            out.append(Label.UNLABELED)
        elif r < p_unlabeled + (1.0 - p_unlabeled) / 2.0:
            out.append(Label.FRAUD)
        else:
            out.append(Label.LEGITIMATE)
    return out


def random_partition(rng: np.random.Generator, m: int, avg_size: float = 3.0):
    """Random partition of range(m) into contiguous-free random groups."""
    order = list(rng.permutation(m))
    clusters = []
    i = 0
    while i < m:
        size = 1 + rng.poisson(max(avg_size - 1.0, 0.0))
        clusters.append(sorted(order[i : i + size]))
        i += size
    return clusters


# ---------------------------------------------------------------------------
# Reference implementations


def ref_hamming(u, v, w, null_policy="mismatch", normalized=False) -> float:
    total = 0.0
    for a, b, wi in zip(u, v, w):
        if a is None or b is None:
            mism = null_policy == "mismatch"
        else:
            mism = a != b
        if mism:
            total += wi
    denom = sum(w) if normalized else len(w)
    return total / denom


def ref_single_linkage_partition(D: np.ndarray, d_max: float):
    """Naive agglomerative single linkage cut at d_max.

    Quadratic scan for the closest cluster pair at each step, recomputing
    inter-cluster minima from the raw matrix.  Intended for tie-free inputs.
    """
    clusters = [[i] for i in range(D.shape[0])]
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = float(D[np.ix_(clusters[a], clusters[b])].min())
                if best is None or d < best[0]:
                    best = (d, a, b)
        if best[0] > d_max:
            break
        _, a, b = best
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
    return sorted(tuple(c) for c in clusters)


def partition_of(clustering):
    return sorted(tuple(c) for c in clustering.clusters)


def ref_impurity(clusters, labels) -> Fraction:
    num = Fraction(0)
    denom = Fraction(0)
    for c in clusters:
        frauds = sum(1 for i in c if labels[i] is Label.FRAUD)
        legits = sum(1 for i in c if labels[i] is Label.LEGITIMATE)
        denom += frauds + legits
        num += frauds + legits - max(frauds, legits)
    return num / denom


def ref_clustered_rate(clusters, labels, target, scope=None):
    in_big = set()
    for c in clusters:
        if len(c) >= 2:
            in_big.update(c)
    indices = range(len(labels)) if scope is None else scope
    total = sum(1 for i in indices if labels[i] is target)
    if total == 0:
        return None
    hit = sum(1 for i in indices if labels[i] is target and i in in_big)
    return Fraction(hit, total)


def ref_confusion(predicted, truth):
    tp = fp = fn = tn = 0
    for p, t in zip(predicted, truth):
        if p and t is Label.FRAUD:
            tp += 1
        elif p:
            fp += 1
        elif t is Label.FRAUD:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def ref_verdict_flags(clusters, labels):
    """Two-pass oracle: first count frauds per cluster, then flag unlabeled
    members of clusters that have >= 2 members and >= 1 known fraud."""
    fraud_count = {}
    for k, c in enumerate(clusters):
        fraud_count[k] = sum(1 for i in c if labels[i] is Label.FRAUD)
    flags = {}
    for k, c in enumerate(clusters):
        for i in c:
            if labels[i] is Label.UNLABELED:
                flags[i] = len(c) >= 2 and fraud_count[k] >= 1
    return flags


def tie_free_fixture(rng: np.random.Generator, m: int, d: int = 24):
    """(dataset, weights, d_max) whose pairwise distances are all distinct
    and whose cut threshold equals no pairwise distance.

    Distances are weight-subset sums, so distinctness needs every pair to
    mismatch on a different attribute subset; a wide binary alphabet makes
    that likely and the loop retries the rare collisions.
    """
    from fraudclust.distance import distance_matrix

    for _ in range(200):
        data = random_dataset(rng, m, d, alphabet=2)
        w = rng.uniform(0.25, 2.0, size=d)
        D = distance_matrix(range(m), range(m), data, w)
        iu = np.triu_indices(m, k=1)
        vals = np.sort(D[iu])
        if np.unique(vals).size != vals.size:
            continue
        k = int(rng.integers(0, vals.size - 1))
        d_max = float((vals[k] + vals[k + 1]) / 2.0)
        return data, w, d_max, D
    raise AssertionError("could not build a tie-free fixture")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
