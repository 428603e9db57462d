"""Label-propagation fraud detection over clusters.

An unlabeled order is flagged iff its cluster has at least two members and
contains at least one record labeled fraud.  Labeled records receive no
verdicts; labeled-legitimate members do not veto flagging.  Verdicts carry
the cluster id and its known-fraud count so analysts can see why an order
surfaced.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .agglo import Clustering
from .schema import Dataset, Label

__all__ = ["Verdict", "label_propagation", "write_verdicts", "write_cluster_report"]


@dataclass(frozen=True)
class Verdict:
    record_id: str
    flagged: bool
    cluster_id: int
    known_fraud_count: int


def label_propagation(cl: Clustering, data: Dataset) -> list[Verdict]:
    """Verdicts for every unlabeled record, in dataset order."""
    labels = data.labels()
    assignment = cl.assignment()
    fraud_counts = [
        sum(1 for i in c if labels[i] is Label.FRAUD) for c in cl.clusters
    ]
    verdicts = []
    for i, rec in enumerate(data.records):
        if labels[i] is not Label.UNLABELED:
            continue
        k = assignment[i]
        frauds = fraud_counts[k]
        flagged = len(cl.clusters[k]) >= 2 and frauds >= 1
        verdicts.append(Verdict(rec.record_id, flagged, k, frauds))
    return verdicts


def write_verdicts(verdicts: list[Verdict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "flagged", "cluster_id", "known_fraud_count"])
        for v in verdicts:
            writer.writerow(
                [v.record_id, int(v.flagged), v.cluster_id, v.known_fraud_count]
            )


def write_cluster_report(cl: Clustering, data: Dataset, path: str | Path) -> None:
    """Screening priority queue: clusters sorted by known-fraud count then
    size, both descending."""
    labels = data.labels()
    rows = []
    for k, c in enumerate(cl.clusters):
        frauds = sum(1 for i in c if labels[i] is Label.FRAUD)
        rows.append((k, len(c), frauds))
    rows.sort(key=lambda r: (-r[2], -r[1], r[0]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster_id", "size", "known_fraud_count"])
        for row in rows:
            writer.writerow(row)
