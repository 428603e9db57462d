"""Evaluation metrics: impurity, clustered-fraud rates, detection rates,
timings and the hyperparameter performance score.

A record counts as "clustered" iff its cluster has at least two members;
singletons are not grouped.  Ratios with a zero denominator return ``None``
rather than a silent zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .agglo import Clustering
from .schema import Label

__all__ = [
    "MetricsReport",
    "GridSearchRow",
    "impurity",
    "cfr",
    "clr",
    "cfr_subset",
    "clustered_mask",
    "detection_metrics",
    "performance_score",
]


@dataclass
class MetricsReport:
    """Flat bundle of evaluation results for one clustering run."""

    impurity: float | None = None
    cfr: float | None = None
    cfr_u: float | None = None
    clr: float | None = None
    recall_clust: float | None = None
    recall_final: float | None = None
    precision: float | None = None
    fpr: float | None = None
    wall_time_s: float | None = None
    cluster_count: int = 0
    singleton_count: int = 0
    extra: dict = field(default_factory=dict)

    def as_items(self) -> list[tuple[str, str]]:
        items = []
        for key in (
            "impurity",
            "cfr",
            "cfr_u",
            "clr",
            "recall_clust",
            "recall_final",
            "precision",
            "fpr",
            "wall_time_s",
            "cluster_count",
            "singleton_count",
        ):
            value = getattr(self, key)
            items.append((key, "undefined" if value is None else repr(value)))
        for key, value in sorted(self.extra.items()):
            items.append((key, "undefined" if value is None else repr(value)))
        return items

    def write(self, path: str | Path) -> None:
        lines = [f"{k}={v}" for k, v in self.as_items()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class GridSearchRow:
    rho_mc: float
    rho_s: float
    impurity: float
    cfr: float
    time_s: float
    score: float | None = None


def impurity(cl: Clustering, labels: Sequence[Label]) -> float:
    """Fraction of labeled clustered records outside their cluster's
    majority class.

    Unlabeled members are excluded from both numerator and denominator.
    Singleton clusters contribute nothing to the numerator.  Ties resolve
    to fraud, which cannot change the value.
    """
    if cl.n_clusters == 0:
        raise ValueError("empty clustering")
    num = 0
    denom = 0
    for c in cl.clusters:
        frauds = sum(1 for i in c if labels[i] is Label.FRAUD)
        legits = sum(1 for i in c if labels[i] is Label.LEGITIMATE)
        s = frauds + legits
        denom += s
        num += s - max(frauds, legits)
    if denom == 0:
        raise ValueError("no labeled records in clustering")
    return num / denom


def clustered_mask(cl: Clustering, n: int) -> list[bool]:
    """True where the record's cluster has two or more members."""
    out = [False] * n
    for c in cl.clusters:
        if len(c) >= 2:
            for i in c:
                out[i] = True
    return out


def _clustered_rate(
    cl: Clustering,
    labels: Sequence[Label],
    target: Label,
    scope: Iterable[int] | None,
) -> float | None:
    mask = clustered_mask(cl, len(labels))
    indices = range(len(labels)) if scope is None else scope
    total = 0
    clustered = 0
    for i in indices:
        if labels[i] is target:
            total += 1
            if mask[i]:
                clustered += 1
    if total == 0:
        return None
    return clustered / total


def cfr(cl: Clustering, labels: Sequence[Label]) -> float | None:
    """Clustered-fraud rate: frauds in non-singleton clusters / all frauds."""
    return _clustered_rate(cl, labels, Label.FRAUD, None)


def clr(cl: Clustering, labels: Sequence[Label]) -> float | None:
    """Clustered-legitimate rate, the legitimate analog of :func:`cfr`."""
    return _clustered_rate(cl, labels, Label.LEGITIMATE, None)


def cfr_subset(
    cl: Clustering, labels: Sequence[Label], scope: Iterable[int], target: Label = Label.FRAUD
) -> float | None:
    """Clustered rate for ``target`` restricted to the given record indices
    (e.g. the unlabeled-window set)."""
    return _clustered_rate(cl, labels, target, scope)


def detection_metrics(
    predicted: Sequence[bool],
    truth: Sequence[Label],
    cl: Clustering,
    scope: Sequence[int],
) -> tuple[float | None, float | None, float | None, float | None]:
    """Confusion-matrix ratios over the scoped records.

    ``predicted[k]`` and ``truth[k]`` refer to ``scope[k]``.  Returns
    (recall_clust, recall_final, precision, fpr); recall_clust is computed
    over clustered frauds only, so ``recall_final == recall_clust * cfr_u``
    holds by construction.
    """
    if len(predicted) != len(scope) or len(truth) != len(scope):
        raise ValueError("predicted/truth must align with scope")
    in_cluster = {i for c in cl.clusters if len(c) >= 2 for i in c}
    tp = fp = fn = tn = 0
    clustered_frauds = 0
    for k, i in enumerate(scope):
        is_fraud = truth[k] is Label.FRAUD
        if is_fraud and i in in_cluster:
            clustered_frauds += 1
        if predicted[k]:
            if is_fraud:
                tp += 1
            else:
                fp += 1
        else:
            if is_fraud:
                fn += 1
            else:
                tn += 1
    recall_clust = tp / clustered_frauds if clustered_frauds else None
    recall_final = tp / (tp + fn) if (tp + fn) else None
    precision = tp / (tp + fp) if (tp + fp) else None
    fpr = fp / (fp + tn) if (fp + tn) else None
    return recall_clust, recall_final, precision, fpr


def _minmax(values: list[float], value: float, reverse: bool = False) -> float:
    lo, hi = min(values), max(values)
    if hi == lo:
        return 0.0  # constant metric carries no preference
    if reverse:
        return (hi - value) / (hi - lo)
    return (value - lo) / (hi - lo)


def performance_score(
    rows: Sequence[GridSearchRow],
    exclude_rho_mc_from_time_norm: float | None = 1.01,
) -> list[GridSearchRow]:
    """Score each row as normalized impurity + reversed normalized CFR +
    normalized time; lower is better.

    Rows with ``rho_mc`` equal to ``exclude_rho_mc_from_time_norm`` are
    excluded from the time min/max (their timings are outliers) but still
    receive a score against the restricted range.
    """
    if len(rows) < 2:
        raise ValueError("need at least two rows to normalize")
    imps = [r.impurity for r in rows]
    cfrs = [r.cfr for r in rows]
    times = [
        r.time_s
        for r in rows
        if exclude_rho_mc_from_time_norm is None
        or r.rho_mc != exclude_rho_mc_from_time_norm
    ]
    if not times:
        times = [r.time_s for r in rows]
    scored = []
    for r in rows:
        score = (
            _minmax(imps, r.impurity)
            + _minmax(cfrs, r.cfr, reverse=True)
            + _minmax(times, r.time_s)
        )
        scored.append(GridSearchRow(r.rho_mc, r.rho_s, r.impurity, r.cfr, r.time_s, score))
    return scored
