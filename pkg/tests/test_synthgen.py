from collections import Counter

import numpy as np
import pytest

from fraudclust.schema import Label, default_schema
from fraudclust.synthgen import (
    GeneratorConfig,
    generate,
    load_ground_truth,
    write_ground_truth,
)

SMALL = GeneratorConfig(
    seed=3,
    n_legit=200,
    n_fraud=100,
    n_campaigns=5,
    campaign_size_range=(10, 30),
)


def test_counts_and_labels():
    data, gt = generate(SMALL, default_schema())
    assert data.n == 300
    labels = data.labels()
    assert sum(1 for l in labels if l is Label.LEGITIMATE) == 200
    assert sum(1 for l in labels if l is Label.FRAUD) == 100
    assert gt.shape == (300,)
    assert int(np.sum(gt == -1)) == 200


def test_campaign_structure():
    data, gt = generate(SMALL, default_schema())
    sizes = Counter(int(c) for c in gt if c >= 0)
    assert set(sizes) == set(range(5))
    assert all(10 <= s <= 30 for s in sizes.values())
    assert sum(sizes.values()) == 100
    labels = data.labels()
    for i, c in enumerate(gt):
        assert (c >= 0) == (labels[i] is Label.FRAUD)


def test_core_members_share_template():
    cfg = SMALL
    data, gt = generate(cfg, default_schema())
    for campaign in range(cfg.n_campaigns):
        members = [i for i in range(data.n) if gt[i] == campaign]
        counts = Counter(data.records[i].values for i in members)
        most_common = counts.most_common(1)[0][1]
        n_core = max(1, round(cfg.core_fraction * len(members)))
        assert most_common >= n_core


def test_campaign_time_window():
    cfg = SMALL
    data, gt = generate(cfg, default_schema())
    for campaign in range(cfg.n_campaigns):
        ts = [data.records[i].timestamp for i in range(data.n) if gt[i] == campaign]
        assert max(ts) - min(ts) <= cfg.span_seconds / 10.0
    all_ts = [r.timestamp for r in data.records]
    assert min(all_ts) >= cfg.start_time
    assert max(all_ts) <= cfg.start_time + cfg.span_seconds


def test_determinism():
    a, gta = generate(SMALL, default_schema())
    b, gtb = generate(SMALL, default_schema())
    assert a.records == b.records
    assert np.array_equal(gta, gtb)
    from dataclasses import replace

    c, _ = generate(replace(SMALL, seed=4), default_schema())
    assert c.records != a.records


def test_record_ids_unique():
    data, _ = generate(SMALL, default_schema())
    ids = [r.record_id for r in data.records]
    assert len(set(ids)) == len(ids)


def test_null_injection():
    cfg = GeneratorConfig(
        seed=1, n_legit=50, n_fraud=20, n_campaigns=2, campaign_size_range=(5, 15),
        null_prob=0.2,
    )
    data, _ = generate(cfg, default_schema())
    assert any(v is None for r in data.records for v in r.values)
    data2, _ = generate(SMALL, default_schema())  # null_prob = 0: no missing values
    assert all(v is not None for r in data2.records for v in r.values)


def test_infeasible_campaign_sizes():
    with pytest.raises(ValueError):
        generate(
            GeneratorConfig(n_legit=10, n_fraud=100, n_campaigns=2,
                            campaign_size_range=(10, 20)),
            default_schema(),
        )
    with pytest.raises(ValueError):
        generate(
            GeneratorConfig(n_legit=10, n_fraud=5, n_campaigns=0),
            default_schema(),
        )


def test_no_campaigns_no_fraud():
    data, gt = generate(
        GeneratorConfig(n_legit=30, n_fraud=0, n_campaigns=0), default_schema()
    )
    assert data.n == 30
    assert np.all(gt == -1)


def test_probability_validation():
    with pytest.raises(ValueError):
        GeneratorConfig(core_fraction=1.5)
    with pytest.raises(ValueError):
        GeneratorConfig(null_prob=-0.1)
    with pytest.raises(ValueError):
        GeneratorConfig(cardinality={k: 0 for k in SMALL.cardinality})


def test_ground_truth_round_trip(tmp_path):
    data, gt = generate(SMALL, default_schema())
    path = tmp_path / "gt.csv"
    write_ground_truth(data, gt, path)
    loaded = load_ground_truth(path)
    assert len(loaded) == data.n
    for rec, c in zip(data.records, gt):
        assert loaded[rec.record_id] == int(c)
