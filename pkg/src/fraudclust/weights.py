"""Attribute-weighting strategies: cardinality-driven and label-driven.

Cardinality weights map each attribute's inverse normalized richness
``r_inv = n_i / card_i`` through a sigmoid centered on the median richness,
yielding weights in [1, 3): rare, high-cardinality attributes matter more.

Label-driven weights cluster a labeled training set with unit weights,
split the resulting non-singleton clusters into pure-fraud, pure-legitimate
and mixed kinds, and score each attribute by how concentrated its values
are (Simpson index) in each kind.  Two normalized advantages are combined
into a weight in [1, 3].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agglo import Clustering
from .distance import DistanceParams, unit_weights
from .recagglo import RecAggloParams, rec_agglo
from .schema import AttributeSchema, Dataset, Label

__all__ = [
    "CardinalityStats",
    "SimpsonProfile",
    "cardinality_stats",
    "cardinality_weight_from_r_inv",
    "cardinality_weights",
    "simpson_index",
    "label_weights",
    "save_weights",
    "load_weights",
]

# Floor for the advantage normalizer; avoids division by zero when no
# attribute carries any signal.
_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class CardinalityStats:
    """Per-attribute distinct-value and null statistics."""

    card: np.ndarray  # distinct non-null value count
    n_i: np.ndarray  # non-null instance count
    r_inv: np.ndarray  # n_i / card_i (0 where n_i == 0)
    median_r_inv: float


@dataclass(frozen=True)
class SimpsonProfile:
    """Mean Simpson indices per cluster kind plus derived advantages."""

    mean_fraud: np.ndarray
    mean_legit: np.ndarray
    mean_mixed: np.ndarray
    cluster_counts: dict[str, int]
    raw_fl: np.ndarray
    raw_pm: np.ndarray
    norm_adv: float
    adv_fl: np.ndarray
    adv_pm: np.ndarray


def cardinality_stats(data: Dataset) -> CardinalityStats:
    if data.n == 0:
        raise ValueError("empty dataset")
    codes = data.codes()
    d = data.schema.d
    card = np.zeros(d, dtype=np.int64)
    n_i = np.zeros(d, dtype=np.int64)
    for j in range(d):
        col = codes[:, j]
        non_null = col[col >= 0]
        n_i[j] = non_null.size
        card[j] = np.unique(non_null).size
    with np.errstate(divide="ignore", invalid="ignore"):
        r_inv = np.where(n_i > 0, n_i / np.maximum(card, 1), 0.0)
    present = r_inv[n_i > 0]
    if present.size == 0:
        raise ValueError("no attribute has any non-null value")
    return CardinalityStats(card, n_i, r_inv, float(np.median(present)))


def cardinality_weight_from_r_inv(r_inv: float, median_r_inv: float) -> float:
    """w = 1 + 2 * (1 - r_inv / (median + r_inv)), in [1, 3)."""
    return 1.0 + 2.0 * (1.0 - r_inv / (median_r_inv + r_inv))


def cardinality_weights(
    data: Dataset, median_r_inv: float | None = None
) -> np.ndarray:
    """Cardinality-driven weight vector for the dataset's schema.

    ``median_r_inv`` overrides the computed median, e.g. to reuse a value
    estimated on a larger corpus.  Attributes with no non-null values get
    weight 1.
    """
    stats = cardinality_stats(data)
    med = stats.median_r_inv if median_r_inv is None else float(median_r_inv)
    w = np.ones(data.schema.d, dtype=np.float64)
    for j in range(data.schema.d):
        if stats.n_i[j] > 0:
            w[j] = cardinality_weight_from_r_inv(float(stats.r_inv[j]), med)
    return w


def _attr_index(schema: AttributeSchema, attribute: int | str) -> int:
    if isinstance(attribute, str):
        return schema.attribute_ids.index(attribute)
    return attribute


def simpson_index(cluster, attribute: int | str, data: Dataset) -> float:
    """Sum of squared value frequencies within the cluster for one attribute.

    Missing values count as a value of their own.
    """
    members = list(cluster)
    if not members:
        raise ValueError("cluster must be non-empty")
    j = _attr_index(data.schema, attribute)
    col = data.codes()[members, j]
    _, counts = np.unique(col, return_counts=True)
    p = counts / len(members)
    return float(np.sum(p * p))


def _simpson_all(cluster, data: Dataset) -> np.ndarray:
    members = np.asarray(list(cluster), dtype=np.intp)
    codes = data.codes()[members]
    d = codes.shape[1]
    out = np.empty(d)
    for j in range(d):
        _, counts = np.unique(codes[:, j], return_counts=True)
        p = counts / members.size
        out[j] = np.sum(p * p)
    return out


def _cluster_kind(cluster, labels: list[Label]) -> str | None:
    has_fraud = any(labels[i] is Label.FRAUD for i in cluster)
    has_legit = any(labels[i] is Label.LEGITIMATE for i in cluster)
    if has_fraud and has_legit:
        return "mixed"
    if has_fraud:
        return "fraud"
    if has_legit:
        return "legit"
    return None  # only unlabeled members: no signal


def label_weights(
    data: Dataset,
    params: RecAggloParams | None = None,
    train_d_max: float = 0.56,
    clustering: Clustering | None = None,
) -> tuple[np.ndarray, SimpsonProfile]:
    """Label-driven weight vector trained on a fraud/legitimate dataset.

    Clusters the data with unit weights at ``train_d_max`` (or reuses a
    precomputed ``clustering``), then derives per-attribute advantages from
    Simpson-index contrasts between cluster kinds.
    """
    labels = data.labels()
    if not any(l is Label.FRAUD for l in labels) or not any(
        l is Label.LEGITIMATE for l in labels
    ):
        raise ValueError("training data needs both fraud and legitimate labels")
    if clustering is None:
        if params is None:
            params = RecAggloParams()
        dist = DistanceParams(unit_weights(data.schema.d))
        train_params = RecAggloParams(
            delta_a=params.delta_a,
            d_max=train_d_max,
            rho_s=params.rho_s,
            rho_mc=params.rho_mc,
            seed=params.seed,
            max_recursion_guard=params.max_recursion_guard,
        )
        initial = Clustering.build([list(range(data.n))], "sample")
        clustering = rec_agglo(initial, data, dist, train_params)

    d = data.schema.d
    sums = {k: np.zeros(d) for k in ("fraud", "legit", "mixed")}
    counts = {k: 0 for k in ("fraud", "legit", "mixed")}
    for c in clustering.clusters:
        if len(c) < 2:
            continue  # singleton Simpson index is identically 1: no signal
        kind = _cluster_kind(c, labels)
        if kind is None:
            continue
        sums[kind] += _simpson_all(c, data)
        counts[kind] += 1

    if counts["fraud"] == 0:
        raise ValueError(
            "no pure-fraud clusters formed; use a larger or denser training set"
        )
    if counts["legit"] == 0 and counts["mixed"] == 0:
        raise ValueError("clustering produced only one cluster kind")
    if counts["legit"] == 0:
        raise ValueError(
            "no pure-legitimate clusters formed; use a larger training set"
        )

    mean_f = sums["fraud"] / counts["fraud"]
    mean_l = sums["legit"] / counts["legit"]
    if counts["mixed"] > 0:
        mean_m = sums["mixed"] / counts["mixed"]
        raw_pm = mean_f + mean_l - 2.0 * mean_m
    else:
        # No impurity evidence: the pure-vs-mixed advantage stays neutral.
        mean_m = np.zeros(d)
        raw_pm = np.zeros(d)
    raw_fl = mean_f - mean_l

    norm = max(float(np.max(np.abs(raw_fl))), float(np.max(np.abs(raw_pm))) / 2.0)
    norm = max(norm, _NORM_FLOOR)
    adv_fl = raw_fl / norm
    adv_pm = raw_pm / (2.0 * norm)
    combined = np.clip(adv_fl + adv_pm, 0.0, 2.0)
    w = 1.0 + combined

    profile = SimpsonProfile(
        mean_fraud=mean_f,
        mean_legit=mean_l,
        mean_mixed=mean_m,
        cluster_counts=dict(counts),
        raw_fl=raw_fl,
        raw_pm=raw_pm,
        norm_adv=norm,
        adv_fl=adv_fl,
        adv_pm=adv_pm,
    )
    return w, profile


def save_weights(w: np.ndarray, schema: AttributeSchema, path: str | Path) -> None:
    """Serialize a weight vector as attribute_id=weight lines."""
    lines = [
        f"{aid}={float(w[j])!r}" for j, aid in enumerate(schema.attribute_ids)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_weights(schema: AttributeSchema, path: str | Path) -> np.ndarray:
    by_id = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        aid, _, value = line.partition("=")
        by_id[aid.strip()] = float(value)
    try:
        return np.array([by_id[aid] for aid in schema.attribute_ids])
    except KeyError as exc:
        raise ValueError(f"weight file missing attribute {exc.args[0]!r}") from None
