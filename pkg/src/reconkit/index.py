"""Candidate retrieval: blocking indices over entity names."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from reconkit.datamodel import Dataset, EntityRecord, ReconciliationQuery
from reconkit.textproc import qgrams, soundex, tokenize


@dataclass(frozen=True)
class IndexedDataset:
    dataset: Dataset
    q: int = 3
    token_postings: dict = field(default_factory=dict)
    qgram_postings: dict = field(default_factory=dict)
    phonetic_blocks: dict = field(default_factory=dict)
    doc_freq: dict = field(default_factory=dict)
    entity_count: int = 0
    max_popularity: float = 0.0

    def idf(self, token: str) -> float:
        """Natural-log idf; tokens unseen in the corpus weigh 0."""
        df = self.doc_freq.get(token, 0)
        if df == 0:
            return 0.0
        return math.log(self.entity_count / df)


def build_index(d: Dataset, q: int = 3) -> IndexedDataset:
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    tokens = defaultdict(set)
    grams = defaultdict(set)
    blocks = defaultdict(set)
    for e in d.entities.values():
        for t in tokenize(e.name):
            tokens[t].add(e.id)
        for g in qgrams(e.name, q):
            grams[g].add(e.id)
        blocks[soundex(e.name)].add(e.id)
    blocks.pop("0000", None)

    return IndexedDataset(
        dataset=d,
        q=q,
        token_postings={k: frozenset(v) for k, v in tokens.items()},
        qgram_postings={k: frozenset(v) for k, v in grams.items()},
        phonetic_blocks={k: frozenset(v) for k, v in blocks.items()},
        doc_freq={k: len(v) for k, v in tokens.items()},
        entity_count=len(d.entities),
        max_popularity=d.max_popularity,
    )


def passes_type_filter(e: EntityRecord, constraint) -> bool:
    return not constraint or not e.types.isdisjoint(constraint)


def retrieve_candidates(ix: IndexedDataset, query: ReconciliationQuery, k: int) -> list[str]:
    """Short list of entity ids for ``query``, best first.

    Token postings are always consulted. Q-gram postings are added only when
    the token hits number fewer than ``k``, and Soundex blocks only when the
    hits so far are still fewer than ``k``. Property constraints play no part.

    Token hits rank by summed idf of shared tokens, then id. Hits found only
    through q-grams follow, ordered by shared q-gram count, then id; Soundex
    only hits come last in id order. Each tier is ranked independently of
    ``k``, so a shorter list is always a prefix of a longer one.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    entities = ix.dataset.entities
    constraint = frozenset(query.type_constraint)
    query_tokens = set(tokenize(query.s))

    def allowed(eid):
        return passes_type_filter(entities[eid], constraint)

    token_score: Counter = Counter()
    for t in query_tokens:
        weight = ix.idf(t)
        for eid in ix.token_postings.get(t, ()):
            token_score[eid] += weight
    ranked = sorted(filter(allowed, token_score), key=lambda eid: (-token_score[eid], eid))
    if len(ranked) >= k:
        return ranked[:k]

    seen = set(ranked)
    overlap: Counter = Counter()
    for g, n in qgrams(query.s, ix.q).items():
        for eid in ix.qgram_postings.get(g, ()):
            if eid not in seen:
                overlap[eid] += n
    ranked += sorted(filter(allowed, overlap), key=lambda eid: (-overlap[eid], eid))
    if len(ranked) >= k or not query_tokens:
        return ranked[:k]

    seen.update(overlap)
    block = ix.phonetic_blocks.get(soundex(query.s), ())
    ranked += sorted(eid for eid in block if eid not in seen and allowed(eid))
    return ranked[:k]


def exhaustive_retrieve(d: Dataset, query: ReconciliationQuery) -> list[str]:
    """Every entity passing the type filter, in id order (no blocking)."""
    constraint = frozenset(query.type_constraint)
    return sorted(eid for eid, e in d.entities.items() if passes_type_filter(e, constraint))
