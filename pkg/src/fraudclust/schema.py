"""Data model for orders: attribute schemas, records, datasets, CSV I/O.

Attribute values are opaque strings compared only by equality.  A single
configurable ``null_marker`` string (default: empty cell) encodes missing
values.  Datasets are immutable after load and safe to share across
threads.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "AttributeCategory",
    "AttributeSchema",
    "Label",
    "Record",
    "Dataset",
    "SchemaError",
    "ParseError",
    "default_schema",
    "load_schema",
    "write_schema",
    "load_csv",
    "write_csv",
    "merge",
]

RESERVED_COLUMNS = ("record_id", "timestamp", "label")

LABEL_TOKENS = {"F": "fraud", "L": "legitimate", "U": "unlabeled", "": "unlabeled"}
TOKEN_FOR_LABEL = {"fraud": "F", "legitimate": "L", "unlabeled": "U"}


class SchemaError(ValueError):
    """Raised when data does not conform to an attribute schema."""


class ParseError(ValueError):
    """Raised on malformed CSV input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AttributeCategory(enum.Enum):
    """The five categories of order information."""

    CUSTOMER = "customer"
    DELIVERY = "delivery"
    SHIPPING = "shipping"
    PAYMENT = "payment"
    BILLING = "billing"


class Label(enum.Enum):
    FRAUD = "fraud"
    LEGITIMATE = "legitimate"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered list of (attribute_id, category) pairs defining record layout."""

    attributes: tuple[tuple[str, AttributeCategory], ...]

    def __post_init__(self):
        ids = [a for a, _ in self.attributes]
        if len(set(ids)) != len(ids):
            raise SchemaError("attribute_ids must be unique")
        for aid in ids:
            if aid in RESERVED_COLUMNS:
                raise SchemaError(f"attribute_id {aid!r} is a reserved column name")

    @property
    def d(self) -> int:
        return len(self.attributes)

    @property
    def attribute_ids(self) -> list[str]:
        return [a for a, _ in self.attributes]

    @property
    def categories(self) -> list[AttributeCategory]:
        return [c for _, c in self.attributes]


def default_schema() -> AttributeSchema:
    """The 37-attribute layout: 9 customer, 3 delivery, 7 shipping,
    11 payment and 7 billing attributes."""
    counts = [
        (AttributeCategory.CUSTOMER, 9, "cust"),
        (AttributeCategory.DELIVERY, 3, "del"),
        (AttributeCategory.SHIPPING, 7, "ship"),
        (AttributeCategory.PAYMENT, 11, "pay"),
        (AttributeCategory.BILLING, 7, "bill"),
    ]
    attrs = []
    for cat, k, prefix in counts:
        for i in range(1, k + 1):
            attrs.append((f"{prefix}_{i}", cat))
    return AttributeSchema(tuple(attrs))


@dataclass(frozen=True)
class Record:
    """One order: id, timestamp, ground-truth label and attribute values.

    ``values`` holds one optional string per schema attribute, in schema
    order; ``None`` means missing.
    """

    record_id: str
    timestamp: float
    label: Label
    values: tuple[str | None, ...]


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of records conforming to one schema."""

    schema: AttributeSchema
    records: tuple[Record, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        d = self.schema.d
        for rec in self.records:
            if len(rec.values) != d:
                raise SchemaError(
                    f"record {rec.record_id!r} has {len(rec.values)} values, "
                    f"schema expects {d}"
                )

    @property
    def n(self) -> int:
        return len(self.records)

    def labels(self) -> list[Label]:
        return [r.label for r in self.records]

    def codes(self) -> np.ndarray:
        """Integer-encoded value matrix, shape (n, d), int32.

        Values are encoded per attribute: equal strings share a code,
        missing values encode to -1.  The encoding is computed once and
        cached; it is only used for equality comparison.
        """
        cached = self._cache.get("codes")
        if cached is not None:
            return cached
        d = self.schema.d
        out = np.empty((self.n, d), dtype=np.int32)
        for j in range(d):
            table: dict[str, int] = {}
            col = out[:, j]
            for i, rec in enumerate(self.records):
                v = rec.values[j]
                if v is None:
                    col[i] = -1
                else:
                    code = table.get(v)
                    if code is None:
                        code = len(table)
                        table[v] = code
                    col[i] = code
        out.setflags(write=False)
        self._cache["codes"] = out
        return out


def load_schema(path: str | Path) -> AttributeSchema:
    """Read a schema file: one ``attribute_id=category`` line per attribute,
    in order."""
    attrs = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("expected attribute_id=category", lineno)
        aid, _, cat = line.partition("=")
        try:
            category = AttributeCategory(cat.strip())
        except ValueError:
            raise ParseError(f"unknown category {cat.strip()!r}", lineno) from None
        attrs.append((aid.strip(), category))
    return AttributeSchema(tuple(attrs))


def write_schema(schema: AttributeSchema, path: str | Path) -> None:
    lines = [f"{aid}={cat.value}" for aid, cat in schema.attributes]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_csv(
    path: str | Path,
    schema: AttributeSchema,
    null_marker: str = "",
) -> Dataset:
    """Load a dataset from CSV.

    Expected header: ``record_id,timestamp,label,<attr_1>,...,<attr_d>``
    with label tokens F (fraud), L (legitimate) and U/empty (unlabeled).
    Cells equal to ``null_marker`` map to missing values.
    """
    expected_header = list(RESERVED_COLUMNS) + schema.attribute_ids
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, header row required", 1) from None
        if header != expected_header:
            raise ParseError(
                f"header mismatch: got {header!r}, expected {expected_header!r}", 1
            )
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(expected_header):
                raise ParseError(
                    f"expected {len(expected_header)} columns, got {len(row)}", lineno
                )
            record_id, ts_str, label_tok = row[0], row[1], row[2]
            if label_tok not in LABEL_TOKENS:
                raise ParseError(f"unknown label token {label_tok!r}", lineno)
            try:
                ts = float(ts_str)
            except ValueError:
                raise ParseError(f"bad timestamp {ts_str!r}", lineno) from None
            values = tuple(
                None if cell == null_marker else cell for cell in row[3:]
            )
            records.append(
                Record(record_id, ts, Label(LABEL_TOKENS[label_tok]), values)
            )
    return Dataset(schema, tuple(records))


def write_csv(data: Dataset, path: str | Path, null_marker: str = "") -> None:
    """Write a dataset in the format accepted by :func:`load_csv`."""
    header = list(RESERVED_COLUMNS) + data.schema.attribute_ids
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in data.records:
            ts = repr(rec.timestamp) if rec.timestamp != int(rec.timestamp) else str(int(rec.timestamp))
            row = [rec.record_id, ts, TOKEN_FOR_LABEL[rec.label.value]]
            row.extend(null_marker if v is None else v for v in rec.values)
            writer.writerow(row)


def merge(a: Dataset, b: Dataset) -> Dataset:
    """Concatenate two datasets over an identical schema (a's records first)."""
    if a.schema != b.schema:
        raise SchemaError("cannot merge datasets with different schemas")
    return Dataset(a.schema, a.records + b.records)
