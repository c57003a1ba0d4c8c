import random

from hypothesis import given, settings, strategies as st

from oracles import scan_token_overlap
from reconkit.datamodel import ReconciliationQuery, load_dataset
from reconkit.index import build_index, exhaustive_retrieve, retrieve_candidates

SCHEMA = {"id_column": "id", "name_column": "name", "type_columns": ["type"]}


def small_dataset(names, types=None):
    rows = ["id,name,type"]
    for i, n in enumerate(names):
        rows.append(f"x{i:03d},{n},{(types or {}).get(i, '')}")
    return load_dataset(("\n".join(rows) + "\n").encode(), SCHEMA)


def test_build_counts(ix, dataset):
    assert ix.doc_freq["distribution"] == 4
    assert ix.doc_freq["greentech"] == 2
    assert ix.entity_count == 5
    for token, posted in ix.token_postings.items():
        assert ix.doc_freq[token] == len(posted)
        assert posted <= dataset.entities.keys()


def test_build_empty():
    ix = build_index(small_dataset([]), 3)
    assert ix.entity_count == 0
    assert not ix.token_postings and not ix.qgram_postings and not ix.phonetic_blocks and not ix.doc_freq


def test_phonetic_block():
    ix = build_index(small_dataset(["Will Ltd"]), 3)
    assert ix.phonetic_blocks == {"W400": {"x000"}}


def test_retrieve_examples(ix):
    assert retrieve_candidates(ix, ReconciliationQuery("greentech"), 10) == ["e1", "e2"]
    assert retrieve_candidates(ix, ReconciliationQuery("zzzz"), 10) == []
    q = ReconciliationQuery("greentech distribution", ("company",))
    assert retrieve_candidates(ix, q, 1) == ["e1"]


def test_retrieve_type_filter(ix, dataset):
    got = retrieve_candidates(ix, ReconciliationQuery("distribution", ("plant",)), 10)
    assert got == ["e3"]
    for eid in retrieve_candidates(ix, ReconciliationQuery("distribution", ("company",)), 10):
        assert "company" in dataset.get_entity(eid).types


def test_qgram_fallback_finds_misspelling(ix):
    assert retrieve_candidates(ix, ReconciliationQuery("greentehc"), 3)[0] in {"e1", "e2"}


def test_phonetic_fallback():
    ix = build_index(small_dataset(["Will", "Bob"]), 3)
    # "Wyl" shares no token and no trigram with "Will", only the code W400
    assert retrieve_candidates(ix, ReconciliationQuery("Wyl"), 5) == ["x000"]


def test_exhaustive(dataset):
    assert exhaustive_retrieve(dataset, ReconciliationQuery("anything")) == ["e1", "e2", "e3", "e4", "e5"]
    assert exhaustive_retrieve(dataset, ReconciliationQuery("x", ("plant",))) == ["e3"]
    assert exhaustive_retrieve(small_dataset([]), ReconciliationQuery("x")) == []


WORDS = ["alpha", "beta", "gamma", "delta", "omega", "acme", "corp", "ltd", "group", "north", "south"]
names = st.lists(st.lists(st.sampled_from(WORDS), min_size=1, max_size=3).map(" ".join), min_size=1, max_size=30)


@settings(max_examples=60, deadline=None)
@given(names, st.lists(st.sampled_from(WORDS + ["zzz", "alhpa"]), min_size=1, max_size=3), st.integers(1, 40), st.integers(1, 40))
def test_recall_and_prefix(ns, qwords, k1, k2):
    types = {i: "t" for i in range(0, len(ns), 2)}
    d = small_dataset(ns, types)
    ix = build_index(d, 3)
    for constraint in ((), ("t",)):
        q = ReconciliationQuery(" ".join(qwords), constraint)
        full = retrieve_candidates(ix, q, len(ns))
        assert set(full) >= scan_token_overlap(d.entities.values(), q.s, constraint)
        assert len(full) == len(set(full))
        for eid in full:
            assert not constraint or "t" in d.get_entity(eid).types
        lo, hi = sorted((k1, k2))
        assert retrieve_candidates(ix, q, lo) == retrieve_candidates(ix, q, hi)[:lo]


def test_ties_by_id():
    d = small_dataset(["beta acme", "alpha acme", "gamma acme"])
    ix = build_index(d, 3)
    assert retrieve_candidates(ix, ReconciliationQuery("acme"), 3) == ["x000", "x001", "x002"]


def test_deterministic_over_shuffles():
    rng = random.Random(3)
    ns = [" ".join(rng.sample(WORDS, 2)) for _ in range(50)]
    d = small_dataset(ns)
    a = retrieve_candidates(build_index(d, 3), ReconciliationQuery("acme corp"), 20)
    b = retrieve_candidates(build_index(d, 3), ReconciliationQuery("corp acme"), 20)
    assert a == b
