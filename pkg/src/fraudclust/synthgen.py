"""Deterministic synthetic order generator with planted fraud campaigns.

Each campaign draws a template of fresh values (one per attribute).  A core
fraction of its members copies the template exactly; the rest reuse each
template value with a per-category overlap probability and otherwise draw
from the shared attribute pool.  Legitimate orders draw from per-attribute
pools whose sizes mirror the cardinality imbalance of real order data, so
their pairwise distances concentrate near the maximum.

Generation is single-threaded and fully determined by the seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .schema import AttributeCategory, AttributeSchema, Dataset, Label, Record

__all__ = ["GeneratorConfig", "generate", "write_ground_truth", "load_ground_truth"]

DEFAULT_OVERLAP = {
    AttributeCategory.SHIPPING: 0.9,
    AttributeCategory.BILLING: 0.9,
    AttributeCategory.DELIVERY: 0.7,
    AttributeCategory.PAYMENT: 0.4,
    AttributeCategory.CUSTOMER: 0.3,
}

DEFAULT_CARDINALITY = {
    AttributeCategory.CUSTOMER: 5000,
    AttributeCategory.DELIVERY: 5,
    AttributeCategory.SHIPPING: 5000,
    AttributeCategory.PAYMENT: 50,
    AttributeCategory.BILLING: 5000,
}


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_legit: int = 10000
    n_fraud: int = 5000
    n_campaigns: int = 50
    campaign_size_range: tuple[int, int] = (50, 150)
    core_fraction: float = 0.5
    intra_campaign_overlap: dict[AttributeCategory, float] = field(
        default_factory=lambda: dict(DEFAULT_OVERLAP)
    )
    legit_repeat_prob: float = 0.05
    cardinality: dict[AttributeCategory, int] = field(
        default_factory=lambda: dict(DEFAULT_CARDINALITY)
    )
    null_prob: float = 0.0
    span_seconds: float = 60 * 86400.0
    start_time: float = 1_500_000_000.0

    def __post_init__(self):
        for p in list(self.intra_campaign_overlap.values()) + [
            self.legit_repeat_prob,
            self.core_fraction,
            self.null_prob,
        ]:
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must be in [0, 1]")
        if any(v < 1 for v in self.cardinality.values()):
            raise ValueError("cardinality targets must be >= 1")


def _campaign_sizes(cfg: GeneratorConfig, rng: np.random.Generator) -> list[int]:
    lo, hi = cfg.campaign_size_range
    k = cfg.n_campaigns
    if k == 0:
        if cfg.n_fraud != 0:
            raise ValueError("n_fraud > 0 requires at least one campaign")
        return []
    if not (k * lo <= cfg.n_fraud <= k * hi):
        raise ValueError(
            f"campaign sizes in {cfg.campaign_size_range} cannot sum to {cfg.n_fraud}"
        )
    sizes = list(rng.integers(lo, hi + 1, size=k))
    # Nudge entries toward the required total while staying in range.
    diff = cfg.n_fraud - sum(sizes)
    idx = 0
    while diff != 0:
        step = 1 if diff > 0 else -1
        new = sizes[idx % k] + step
        if lo <= new <= hi:
            sizes[idx % k] = new
            diff -= step
        idx += 1
    return [int(s) for s in sizes]


def generate(
    cfg: GeneratorConfig, schema: AttributeSchema
) -> tuple[Dataset, np.ndarray]:
    """Generate a dataset plus per-record campaign ids (-1 for legitimate)."""
    rng = np.random.default_rng(cfg.seed)
    d = schema.d
    categories = schema.categories
    cards = np.array([cfg.cardinality[c] for c in categories])
    overlaps = np.array([cfg.intra_campaign_overlap[c] for c in categories])

    def pool_value(j: int, k: int) -> str:
        return f"{schema.attribute_ids[j]}:{k}"

    records: list[Record] = []
    campaign_ids: list[int] = []

    # Legitimate orders: uniform pool draws; a small repeat probability biases
    # toward the low end of each pool to mimic popular values.
    for i in range(cfg.n_legit):
        draws = rng.integers(0, cards)
        repeats = rng.random(d) < cfg.legit_repeat_prob
        draws = np.where(repeats, draws % np.maximum(cards // 10, 1), draws)
        values = [pool_value(j, int(draws[j])) for j in range(d)]
        if cfg.null_prob > 0:
            nulls = rng.random(d) < cfg.null_prob
            values = [None if nulls[j] else values[j] for j in range(d)]
        ts = cfg.start_time + rng.uniform(0.0, cfg.span_seconds)
        records.append(
            Record(f"l{i:06d}", float(ts), Label.LEGITIMATE, tuple(values))
        )
        campaign_ids.append(-1)

    sizes = _campaign_sizes(cfg, rng)
    fraud_ordinal = 0
    for campaign, size in enumerate(sizes):
        template = [f"{schema.attribute_ids[j]}:c{campaign}" for j in range(d)]
        n_core = max(1, int(round(cfg.core_fraction * size)))
        window_len = cfg.span_seconds / 10.0
        window_start = cfg.start_time + rng.uniform(
            0.0, cfg.span_seconds - window_len
        )
        for member in range(size):
            if member < n_core:
                values = list(template)
            else:
                use_shared = rng.random(d) < overlaps
                draws = rng.integers(0, cards)
                values = [
                    template[j] if use_shared[j] else pool_value(j, int(draws[j]))
                    for j in range(d)
                ]
            ts = window_start + rng.uniform(0.0, window_len)
            records.append(
                Record(
                    f"f{fraud_ordinal:06d}", float(ts), Label.FRAUD, tuple(values)
                )
            )
            campaign_ids.append(campaign)
            fraud_ordinal += 1

    order = rng.permutation(len(records))
    records = [records[i] for i in order]
    gt = np.array([campaign_ids[i] for i in order], dtype=np.int64)
    return Dataset(schema, tuple(records)), gt


def write_ground_truth(data: Dataset, campaign_ids: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "campaign_id"])
        for rec, cid in zip(data.records, campaign_ids):
            writer.writerow([rec.record_id, int(cid)])


def load_ground_truth(path: str | Path) -> dict[str, int]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for record_id, cid in reader:
            out[record_id] = int(cid)
    return out
