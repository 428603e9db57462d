"""Weighted Hamming distance kernel and dense distance-matrix construction.

The distance between two records is ``(1/d) * sum_i w_i * mismatch(u_i, v_i)``
where ``d`` is the attribute count.  The denominator is always ``d`` (not the
weight sum), so weighted distances can exceed 1; an optional normalized mode
divides by ``sum(w)/d`` instead.

Null handling is controlled by a policy:

* ``"mismatch"`` (default): a missing value differs from everything,
  including another missing value.
* ``"ignore"``: positions where either value is missing contribute 0.

A module-level counter tracks the number of pairwise distance evaluations;
the sampling module relies on it to verify its complexity contract.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .schema import Dataset, Record

__all__ = [
    "NullPolicy",
    "DistanceParams",
    "unit_weights",
    "validate_weights",
    "hamming",
    "distance_matrix",
    "reset_pair_count",
    "pair_count",
    "MatrixBudgetError",
]

NullPolicy = Literal["mismatch", "ignore"]

# AggloClust only ever sees |c| <= 4 * delta_a, so a dense matrix is fine;
# the guard catches misuse on full datasets.
DEFAULT_CELL_BUDGET = 10**9

_pair_count = 0


def reset_pair_count() -> None:
    global _pair_count
    _pair_count = 0


def pair_count() -> int:
    """Number of pairwise Hamming evaluations since the last reset."""
    return _pair_count


class MatrixBudgetError(MemoryError):
    """Requested distance matrix exceeds the configured cell budget."""


@dataclass(frozen=True)
class DistanceParams:
    """Distance configuration shared across the clustering stack."""

    weights: np.ndarray
    linkage: Literal["single", "complete"] = "single"
    d_max: float = 0.5
    null_policy: NullPolicy = "mismatch"
    normalized: bool = False
    n_jobs: int = 1
    cell_budget: int = DEFAULT_CELL_BUDGET

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        validate_weights(w)
        object.__setattr__(self, "weights", w)


def unit_weights(d: int) -> np.ndarray:
    return np.ones(d, dtype=np.float64)


def validate_weights(w: np.ndarray) -> None:
    if w.ndim != 1:
        raise ValueError("weight vector must be one-dimensional")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")


def _mismatch_values(
    u: Sequence[str | None], v: Sequence[str | None], policy: NullPolicy
) -> np.ndarray:
    out = np.empty(len(u), dtype=bool)
    for i, (a, b) in enumerate(zip(u, v)):
        if a is None or b is None:
            out[i] = policy == "mismatch"
        else:
            out[i] = a != b
    return out


def hamming(
    u: Record,
    v: Record,
    w: np.ndarray,
    null_policy: NullPolicy = "mismatch",
    normalized: bool = False,
) -> float:
    """Weighted Hamming distance between two records."""
    global _pair_count
    if len(u.values) != len(v.values) or len(w) != len(u.values):
        raise ValueError("record/weight length mismatch")
    mism = _mismatch_values(u.values, v.values, null_policy)
    _pair_count += 1
    denom = float(np.sum(w)) if normalized else len(w)
    return float(np.dot(w, mism)) / denom


def _block_distances(
    a: np.ndarray, b: np.ndarray, w: np.ndarray, policy: NullPolicy, denom: float
) -> np.ndarray:
    # a: (r, d) int32 codes, b: (c, d); null code is -1
    neq = a[:, None, :] != b[None, :, :]
    if policy == "mismatch":
        neq |= (a == -1)[:, None, :]
        neq |= (b == -1)[None, :, :]
    else:
        neq &= (a != -1)[:, None, :]
        neq &= (b != -1)[None, :, :]
    if w.size and np.all(w == w[0]):
        # Uniform weights: the weighted sum is a plain mismatch count, which
        # avoids materializing the boolean block as float64.
        counts = np.count_nonzero(neq, axis=2)
        return counts * (float(w[0]) / denom)
    return neq.astype(np.float64) @ w / denom


def distance_matrix(
    rows: Sequence[int],
    cols: Sequence[int],
    data: Dataset,
    w: np.ndarray,
    null_policy: NullPolicy = "mismatch",
    normalized: bool = False,
    n_jobs: int = 1,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> np.ndarray:
    """Dense weighted-Hamming matrix between two index lists.

    ``out[i, j] == hamming(data.records[rows[i]], data.records[cols[j]], w)``.
    Row blocks may be computed by parallel threads; the result is identical
    to sequential execution because blocks are written to disjoint slices.
    """
    global _pair_count
    validate_weights(w)
    if len(w) != data.schema.d:
        raise ValueError("weight vector length does not match schema")
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    n = data.n
    if rows.size and (rows.min() < 0 or rows.max() >= n):
        raise IndexError("row index out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= n):
        raise IndexError("column index out of range")
    if rows.size * cols.size > cell_budget:
        raise MatrixBudgetError(
            f"{rows.size} x {cols.size} matrix exceeds cell budget {cell_budget}"
        )
    codes = data.codes()
    a = codes[rows]
    b = codes[cols]
    denom = float(np.sum(w)) if normalized else len(w)
    _pair_count += int(rows.size) * int(cols.size)

    out = np.empty((rows.size, cols.size), dtype=np.float64)
    # Bound the (r_block, c, d) boolean temporary to ~64 MB.
    d = data.schema.d
    block = max(1, int(64e6 // max(1, cols.size * d)))
    spans = [(s, min(s + block, rows.size)) for s in range(0, rows.size, block)]

    def fill(span):
        s, e = span
        out[s:e] = _block_distances(a[s:e], b, w, null_policy, denom)

    if n_jobs > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(fill, spans))
    else:
        for span in spans:
            fill(span)
    return out
