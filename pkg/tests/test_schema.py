import pytest

from fraudclust.schema import (
    AttributeCategory,
    AttributeSchema,
    Dataset,
    Label,
    ParseError,
    Record,
    SchemaError,
    default_schema,
    load_csv,
    load_schema,
    merge,
    write_csv,
    write_schema,
)

from conftest import make_dataset, toy_schema


def test_default_schema_shape():
    schema = default_schema()
    assert schema.d == 37
    counts = {}
    for cat in schema.categories:
        counts[cat] = counts.get(cat, 0) + 1
    assert counts == {
        AttributeCategory.CUSTOMER: 9,
        AttributeCategory.DELIVERY: 3,
        AttributeCategory.SHIPPING: 7,
        AttributeCategory.PAYMENT: 11,
        AttributeCategory.BILLING: 7,
    }
    assert schema.attribute_ids[0] == "cust_1"
    assert schema.attribute_ids[-1] == "bill_7"


def test_schema_rejects_duplicate_ids():
    with pytest.raises(SchemaError):
        AttributeSchema((("x", AttributeCategory.CUSTOMER), ("x", AttributeCategory.BILLING)))


def test_schema_rejects_reserved_ids():
    with pytest.raises(SchemaError):
        AttributeSchema((("record_id", AttributeCategory.CUSTOMER),))


def test_record_length_checked():
    schema = toy_schema(3)
    rec = Record("r0", 0.0, Label.UNLABELED, ("a", "b"))
    with pytest.raises(SchemaError):
        Dataset(schema, (rec,))


def test_codes_encoding():
    data = make_dataset(
        [("x", "p"), ("x", None), ("y", "p")],
    )
    codes = data.codes()
    assert codes.shape == (3, 2)
    assert codes[0, 0] == codes[1, 0]  # equal strings share a code
    assert codes[0, 0] != codes[2, 0]
    assert codes[1, 1] == -1  # missing value
    assert codes[0, 1] == codes[2, 1]
    with pytest.raises(ValueError):
        codes[0, 0] = 5  # write-protected


def test_csv_round_trip(tmp_path):
    schema = toy_schema(3)
    data = make_dataset(
        [("a", "b", None), ("a", None, "c")],
        labels=[Label.FRAUD, Label.LEGITIMATE],
        schema=schema,
        timestamps=[10.0, 20.5],
    )
    path = tmp_path / "data.csv"
    write_csv(data, path)
    loaded = load_csv(path, schema)
    assert loaded.n == 2
    assert loaded.records[0].values == ("a", "b", None)
    assert loaded.records[1].values == ("a", None, "c")
    assert loaded.labels() == [Label.FRAUD, Label.LEGITIMATE]
    assert loaded.records[0].timestamp == 10.0
    assert loaded.records[1].timestamp == 20.5


def test_csv_custom_null_marker(tmp_path):
    schema = toy_schema(2)
    data = make_dataset([("a", None)], schema=schema)
    path = tmp_path / "data.csv"
    write_csv(data, path, null_marker="NA")
    loaded = load_csv(path, schema, null_marker="NA")
    assert loaded.records[0].values == ("a", None)


def test_csv_header_mismatch(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("record_id,timestamp,label,wrong\nr0,0,F,x\n")
    with pytest.raises(ParseError) as exc:
        load_csv(path, toy_schema(1))
    assert exc.value.line == 1


def test_csv_bad_label_token(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("record_id,timestamp,label,a0\nr0,0,Z,x\n")
    with pytest.raises(ParseError) as exc:
        load_csv(path, toy_schema(1))
    assert exc.value.line == 2
    assert "Z" in str(exc.value)


def test_csv_bad_timestamp(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("record_id,timestamp,label,a0\nr0,zero,F,x\n")
    with pytest.raises(ParseError) as exc:
        load_csv(path, toy_schema(1))
    assert exc.value.line == 2


def test_csv_column_count(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("record_id,timestamp,label,a0\nr0,0,F\n")
    with pytest.raises(ParseError) as exc:
        load_csv(path, toy_schema(1))
    assert exc.value.line == 2


def test_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ParseError):
        load_csv(path, toy_schema(1))


def test_unlabeled_tokens(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("record_id,timestamp,label,a0\nr0,0,U,x\nr1,1,,y\n")
    loaded = load_csv(path, toy_schema(1))
    assert loaded.labels() == [Label.UNLABELED, Label.UNLABELED]


def test_merge_preserves_order():
    a = make_dataset([("x",)])
    b = make_dataset([("y",)])
    merged = merge(a, b)
    assert [r.values[0] for r in merged.records] == ["x", "y"]


def test_merge_schema_mismatch():
    a = make_dataset([("x",)], schema=toy_schema(1, prefix="a"))
    b = make_dataset([("y",)], schema=toy_schema(1, prefix="b"))
    with pytest.raises(SchemaError):
        merge(a, b)


def test_schema_file_round_trip(tmp_path):
    schema = default_schema()
    path = tmp_path / "schema.txt"
    write_schema(schema, path)
    assert load_schema(path) == schema


def test_schema_file_unknown_category(tmp_path):
    path = tmp_path / "schema.txt"
    path.write_text("a0=warehouse\n")
    with pytest.raises(ParseError):
        load_schema(path)
