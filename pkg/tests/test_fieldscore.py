import math

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURE_NAMES
from oracles import cosine_shared, levenshtein_recursive
from reconkit.datamodel import EntityRecord, EntityRef, ReconciliationQuery, Text
from reconkit.fieldscore import (
    feature_catalog,
    levenshtein,
    levenshtein_similarity,
    popularity_score,
    property_score,
    qgram_similarity,
    score_fields,
    soft_tfidf,
    tfidf_weight,
)
from reconkit.textproc import tokenize

short = st.text(alphabet="abcde ", max_size=12)


def test_levenshtein_examples():
    assert levenshtein("abc", "abc") == 0
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("will", "wil") == 1
    assert levenshtein("", "abc") == 3


@settings(max_examples=300)
@given(short, short, short)
def test_levenshtein_axioms(a, b, c):
    dab = levenshtein(a, b)
    assert dab == levenshtein(b, a)
    assert levenshtein(a, a) == 0
    assert levenshtein(a, c) <= dab + levenshtein(b, c)
    assert dab == levenshtein_recursive(a, b)


def test_levenshtein_similarity():
    assert levenshtein_similarity("will", "wil") == 0.75
    assert levenshtein_similarity("Greentech", "greentech") == 1.0
    assert levenshtein_similarity("", "abc") == 0.0
    assert levenshtein_similarity("", "") == 1.0


def test_qgram_similarity():
    assert qgram_similarity("acme distribution", "acme distribution", 3) == 1.0
    assert qgram_similarity("night", "nacht", 2) == 0.25
    assert qgram_similarity("ab", "cd", 3) == 1.0
    with pytest.raises(ValueError):
        qgram_similarity("ab", "cd", 0)


def test_tfidf_weight(ix):
    doc = tokenize("greentech distribution")
    idf_g, idf_d = math.log(2.5), math.log(1.25)
    assert tfidf_weight("greentech", doc, ix) == pytest.approx(idf_g / math.hypot(idf_g, idf_d))
    assert tfidf_weight("greentech", doc, ix) == pytest.approx(0.9716, abs=1e-4)
    assert tfidf_weight("acme", ["acme"], ix) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        tfidf_weight("acme", doc, ix)


def test_tfidf_weight_zero_idf():
    from reconkit.datamodel import load_dataset
    from reconkit.index import build_index

    d = load_dataset(b"id,name\na,x corp\nb,y corp\n", {"id_column": "id", "name_column": "name"})
    ix = build_index(d)
    assert tfidf_weight("corp", ["x", "corp"], ix) == 0.0
    assert tfidf_weight("corp", ["corp"], ix) == 0.0


def test_soft_tfidf_greentech(ix):
    # values frozen from the vector-space oracle in tests/oracles.py
    services = soft_tfidf("greentech distribution", "greentech services", ix)
    globafrik = soft_tfidf("greentech distribution", "globafrik distribution", ix)
    assert services == pytest.approx(0.480710, abs=1e-6)
    assert globafrik == pytest.approx(0.032495, abs=1e-6)
    assert services > globafrik


@pytest.mark.parametrize("theta", [1.0, 0.9])
def test_soft_tfidf_matches_vector_oracle(ix, theta):
    for a in FIXTURE_NAMES:
        for b in FIXTURE_NAMES:
            assert soft_tfidf(a, b, ix, theta) == pytest.approx(cosine_shared(a, b, FIXTURE_NAMES), abs=1e-12)


def test_soft_tfidf_edges(ix):
    assert soft_tfidf("greentech distribution", "greentech distribution", ix) == pytest.approx(1.0)
    assert soft_tfidf("acme", "foo", ix, 1.0) == 0.0
    assert soft_tfidf("", "", ix) == 0.0
    with pytest.raises(ValueError):
        soft_tfidf("a", "b", ix, 1.5)


def test_soft_tfidf_extended_pairs_near_words(ix):
    simple = soft_tfidf("greentech distribution", "greentech distributon", ix, 1.0)
    soft = soft_tfidf("greentech distribution", "greentech distributon", ix, 0.9)
    # the misspelt word has no idf of its own, so its weight in B stays 0
    assert soft == pytest.approx(simple)
    soft = soft_tfidf("greentech distributon", "greentech distribution", ix, 0.9)
    assert soft == pytest.approx(soft_tfidf("greentech", "greentech distribution", ix, 1.0))


def test_soft_tfidf_extended_uses_each_token_once(ix):
    one = soft_tfidf("acme", "acme acme", ix, 0.5)
    assert 0.0 <= one <= 1.0
    assert soft_tfidf("acme acme", "acme", ix, 0.5) == pytest.approx(one)


@settings(max_examples=200)
@given(short, short, st.floats(0, 1))
def test_similarities_in_unit_interval(a, b, theta):
    from reconkit.index import build_index
    from reconkit.datamodel import load_dataset

    ix = _ix_cache.get("ix")
    if ix is None:
        d = load_dataset(b"id,name\na,abc de\nb,de ea\nc,bad\n", {"id_column": "id", "name_column": "name"})
        ix = _ix_cache["ix"] = build_index(d)
    for v in (levenshtein_similarity(a, b), qgram_similarity(a, b, 2), soft_tfidf(a, b, ix, theta)):
        assert 0.0 <= v <= 1.0


_ix_cache = {}


def test_property_score_examples():
    assert property_score(Text("gb"), [Text("GB")], "text") == 1.0
    assert property_score(Text("2004-03-01"), [Text("2004-03-15")], "date") == 0.9
    for dt in ("text", "date", "number", "entity"):
        assert property_score(Text("1"), [], dt) == 0.0


def test_property_score_rules():
    assert property_score(Text("2004-03-15"), [Text("2004-03-15")], "date") == 1.0
    assert property_score(Text("2004-05-15"), [Text("2004-03-15")], "date") == 0.7
    assert property_score(Text("2005"), [Text("2004-03-15")], "date") == 0.0
    assert property_score(Text("1000"), [Text("1000.9")], "number") == 1.0
    assert property_score(Text("1000"), [Text("1002")], "number") == 0.0
    assert property_score(Text("0"), [Text("0")], "number") == 1.0
    assert property_score(EntityRef("e1"), [EntityRef("e1")], "entity") == 1.0
    assert property_score(EntityRef("e1"), [EntityRef("e2")], "entity") == 0.0
    assert property_score(Text("e1"), [EntityRef("e1")], "entity") == 1.0
    names = {"e1": "Greentech Distribution"}.get
    assert property_score(Text("greentech distribution"), [EntityRef("e1")], "entity", names) == 1.0
    assert property_score(Text("gb"), [Text("fr"), Text("gb")], "text") == 1.0
    assert property_score(Text("gbr"), [Text("gb")], "text") == pytest.approx(2 / 3)


@pytest.mark.parametrize("datatype, value", [("date", "March 2004"), ("number", "lots")])
def test_property_score_bad_query_value(datatype, value):
    with pytest.raises(ValueError):
        property_score(Text(value), [Text("2004")], datatype)


def test_popularity_score():
    rec = lambda p: EntityRecord("x", "x", popularity=p)  # noqa: E731
    assert popularity_score(rec(1e6), 1e6) == 1.0
    assert popularity_score(rec(0), 1e6) == 0.0
    assert popularity_score(rec(999), 1e6) == pytest.approx(0.5, abs=1e-6)
    assert popularity_score(rec(None), 1e6) == 0.5
    assert popularity_score(rec(0), 0) == 0.0
    with pytest.raises(ValueError):
        popularity_score(rec(-1), 10)


def test_score_fields_identical_name(ix, dataset):
    feats = score_fields(ReconciliationQuery("greentech distribution"), dataset.get_entity("e1"), ix)
    by_id = {f.id: f.value for f in feats}
    assert [f.id for f in feats] == ["name_softtfidf", "name_levenshtein", "name_qgram", "popularity", "type_match"]
    assert by_id["name_softtfidf"] == pytest.approx(1.0)
    assert by_id["name_levenshtein"] == 1.0


def test_score_fields_property(ix, dataset):
    q = ReconciliationQuery("greentech distribution", m=(("jurisdiction", Text("gb")),))
    feats = score_fields(q, dataset.get_entity("e2"), ix)
    assert [f.id for f in feats][3] == "prop:jurisdiction"
    assert feats[3].value == 0.0
    feats = score_fields(q, dataset.get_entity("e1"), ix)
    assert feats[3].value == 1.0


def test_score_fields_type_match(ix, dataset):
    feats = score_fields(ReconciliationQuery("greentech", ("plant",)), dataset.get_entity("e1"), ix)
    assert feats[-1].id == "type_match" and feats[-1].value == 0.0
    feats = score_fields(ReconciliationQuery("greentech", ("company",)), dataset.get_entity("e1"), ix)
    assert feats[-1].value == 1.0


def test_score_fields_unknown_property_is_flagged(ix, dataset):
    q = ReconciliationQuery("acme", m=(("bogus", Text("1")), ("founded", Text("not a date"))))
    feats = {f.id: f for f in score_fields(q, dataset.get_entity("e4"), ix)}
    assert feats["prop:bogus"].value == 0.0 and feats["prop:bogus"].warning
    assert feats["prop:founded"].value == 0.0 and feats["prop:founded"].warning


def test_score_fields_entity_property(ix, dataset):
    q = ReconciliationQuery("greentech services", m=(("parent", EntityRef("e1")),))
    feats = {f.id: f.value for f in score_fields(q, dataset.get_entity("e2"), ix)}
    assert feats["prop:parent"] == 1.0
    q = ReconciliationQuery("greentech services", m=(("parent", Text("Greentech Distribution")),))
    feats = {f.id: f.value for f in score_fields(q, dataset.get_entity("e2"), ix)}
    assert feats["prop:parent"] == 1.0


def test_score_fields_deterministic(ix, dataset):
    q = ReconciliationQuery("greentech", ("company",), (("jurisdiction", Text("gb")), ("founded", Text("2004"))))
    runs = {tuple(score_fields(q, dataset.get_entity(e), ix)) for e in ["e1"] * 5}
    assert len(runs) == 1
    ids = [f.id for f in next(iter(runs))]
    assert len(ids) == len(set(ids))


def test_catalog_covers_emitted_ids(ix, dataset):
    catalog = {fid for fid, _, _ in feature_catalog(ix)}
    q = ReconciliationQuery("x", m=tuple((pid, Text("1")) for pid in dataset.properties))
    assert {f.id for f in score_fields(q, dataset.get_entity("e1"), ix)} == catalog
