import json

import pytest

from reconkit.datamodel import (
    EntityRef,
    IntegrityError,
    LookupFailure,
    ParseError,
    Text,
    dump_entities,
    get_entity,
    load_dataset,
)

SCHEMA = {
    "id_column": "id",
    "name_column": "name",
    "type_columns": ["type"],
    "types": [{"id": "company", "name": "Company"}],
    "property_columns": [
        {"column": "jurisdiction", "property_id": "jurisdiction", "datatype": "text"},
        {"column": "parent", "property_id": "parent", "datatype": "entity"},
    ],
    "popularity_column": "revenue",
}
HEADER = b"id,name,type,jurisdiction,parent,revenue\n"


def test_fixture_loads(dataset):
    assert len(dataset) == 5
    assert [e.id for e in dataset.entities.values()] == ["e1", "e2", "e3", "e4", "e5"]
    assert dataset.rejected == ()
    assert get_entity(dataset, "e1").name == "greentech distribution"
    assert dataset.types["company"].name == "Company"
    assert dataset.default_types == ("company",)


def test_eval(dataset):
    assert dataset.eval("e1", "jurisdiction") == [Text("gb")]
    assert dataset.eval("e1", "parent") == []
    assert dataset.eval("e2", "parent") == [EntityRef("e1")]
    with pytest.raises(LookupFailure):
        dataset.eval("e9", "jurisdiction")
    with pytest.raises(LookupFailure):
        dataset.eval("e1", "bogus")


def test_get_entity_absent(dataset):
    assert dataset.get_entity("") is None
    empty = load_dataset(HEADER, SCHEMA)
    assert empty.get_entity("e1") is None
    assert len(empty) == 0


def test_every_ref_resolves(dataset):
    for e in dataset.entities.values():
        for pid in dataset.properties:
            for v in dataset.eval(e.id, pid):
                if isinstance(v, EntityRef):
                    assert dataset.get_entity(v.id) is not None


def test_popularity_absent_is_none(dataset):
    assert dataset.get_entity("e4").popularity is None
    assert dataset.get_entity("e3").popularity == 0.0
    assert dataset.max_popularity == 1_000_000


def test_multi_valued_types(dataset):
    assert dataset.get_entity("e3").types == {"company", "plant"}
    assert dataset.get_entity("e5").types == frozenset()


def test_duplicate_id():
    src = HEADER + b"e1,a,company,gb,,\ne1,b,company,fr,,\n"
    with pytest.raises(IntegrityError) as err:
        load_dataset(src, SCHEMA)
    assert err.value.offender == "e1"
    assert "e1" in str(err.value)


def test_dangling_ref():
    src = HEADER + b"e1,a,company,gb,e7,\n"
    with pytest.raises(IntegrityError, match="e7"):
        load_dataset(src, SCHEMA)


def test_unknown_type():
    src = HEADER + b"e1,a,charity,gb,,\n"
    with pytest.raises(IntegrityError, match="charity"):
        load_dataset(src, SCHEMA)


def test_parse_error_has_line():
    src = HEADER + b"e1,a,company,gb,,\ne2,b,company\n"
    with pytest.raises(ParseError) as err:
        load_dataset(src, SCHEMA)
    assert err.value.line == 3


def test_bad_quoting_is_parse_error():
    src = HEADER + b'e1,"a,company,gb,,\n'
    with pytest.raises(ParseError):
        load_dataset(src, SCHEMA)


def test_rejected_rows_reported():
    src = HEADER + b"e1,a,company,gb,,10\n,nameless,,,,\ne3,,,,,\ne4,d,,,,-5\ne5,e,,,,abc\n"
    d = load_dataset(src, SCHEMA)
    assert list(d.entities) == ["e1"]
    assert [r.line for r in d.rejected] == [3, 4, 5, 6]
    assert "negative" in d.rejected[2].reason


def test_bad_date_rejected():
    schema = dict(SCHEMA, property_columns=[{"column": "jurisdiction", "property_id": "founded", "datatype": "date"}])
    d = load_dataset(HEADER + b"e1,a,,2001-13-01,,\ne2,b,,2001-12,,\n", schema)
    assert list(d.entities) == ["e2"]
    assert len(d.rejected) == 1


def test_schema_as_json_text_and_quoted_cells():
    src = HEADER + b'e1,"Smith, Jones & Co",company,"gb|fr",,\n'
    d = load_dataset(src, json.dumps(SCHEMA))
    assert d.get_entity("e1").name == "Smith, Jones & Co"
    assert d.eval("e1", "jurisdiction") == [Text("gb"), Text("fr")]


def test_deterministic(data_dir):
    from reconkit.datamodel import load_dataset_files

    a = load_dataset_files(str(data_dir / "companies.csv"), str(data_dir / "schema.json"))
    b = load_dataset_files(str(data_dir / "companies.csv"), str(data_dir / "schema.json"))
    assert a == b


def test_round_trip(dataset, data_dir):
    schema = json.loads((data_dir / "schema.json").read_text())
    types = (data_dir / "types.csv").read_bytes()
    again = load_dataset(dump_entities(dataset, schema), schema, types=types)
    for e in dataset.entities.values():
        assert again.get_entity(e.id) == e
        for pid in dataset.properties:
            assert again.eval(e.id, pid) == dataset.eval(e.id, pid)
