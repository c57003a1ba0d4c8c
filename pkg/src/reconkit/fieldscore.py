"""Per-field similarity scores, each normalized to [0, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from reconkit.datamodel import (
    EntityRecord,
    EntityRef,
    ReconciliationQuery,
    Text,
    ValueLiteral,
    parse_date,
    parse_number,
)
from reconkit.index import IndexedDataset
from reconkit.textproc import normalize, qgrams, tokenize

DEFAULT_THETA = 0.9
NAME_FEATURES = (
    ("name_softtfidf", "Name SoftTFIDF", "IDF-weighted token overlap of the names, tolerant to near-identical words"),
    ("name_levenshtein", "Name edit similarity", "1 minus Levenshtein distance over the longer name length"),
    ("name_qgram", "Name trigram similarity", "Dice coefficient of the names' character q-gram multisets"),
)
POPULARITY_FEATURE = ("popularity", "Popularity", "Log-scaled popularity relative to the dataset maximum; 0.5 when unknown")
TYPE_FEATURE = ("type_match", "Type match", "1 when the entity has one of the requested types (or none were requested)")


@dataclass(frozen=True)
class FeatureScore:
    id: str
    name: str
    value: float
    warning: str | None = None


def levenshtein(a: str, b: str) -> int:
    a, b = normalize(a), normalize(b)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_similarity(a: str, b: str) -> float:
    longest = max(len(normalize(a)), len(normalize(b)))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def qgram_similarity(a: str, b: str, q: int = 3) -> float:
    """Dice coefficient over q-gram multisets; two empty bags count as identical."""
    ga, gb = qgrams(a, q), qgrams(b, q)
    total = sum(ga.values()) + sum(gb.values())
    if total == 0:
        return 1.0
    return 2 * sum((ga & gb).values()) / total


def _tfidf_vector(doc: Sequence[str], ix: IndexedDataset) -> dict[str, float]:
    counts: dict[str, int] = {}
    for w in doc:
        counts[w] = counts.get(w, 0) + 1
    raw = {w: n * ix.idf(w) for w, n in counts.items()}
    norm = math.sqrt(sum(x * x for x in raw.values()))
    if norm == 0:
        return dict.fromkeys(raw, 0.0)
    return {w: x / norm for w, x in raw.items()}


def tfidf_weight(w: str, doc: Sequence[str], ix: IndexedDataset) -> float:
    """Cosine-normalized tf-idf weight of token ``w`` within ``doc``."""
    if w not in doc:
        raise ValueError(f"token {w!r} not in document")
    return _tfidf_vector(doc, ix)[w]


def soft_tfidf(
    a: str,
    b: str,
    ix: IndexedDataset,
    theta: float = DEFAULT_THETA,
    inner: Callable[[str, str], float] = levenshtein_similarity,
) -> float:
    """SoftTFIDF similarity of two names over the index's corpus statistics.

    Every token of ``a`` is paired with at most one token of ``b`` (greedy,
    best inner similarity first) and the pair contributes
    ``t(w, A) * t(v, B) * inner(w, v)`` when ``inner(w, v) >= theta``. With
    ``theta = 1`` only identical tokens pair up, which is the plain
    shared-token sum.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    ta, tb = tokenize(a), tokenize(b)
    if ta and ta == tb:
        # identical names are a perfect match even when no token carries idf
        return 1.0
    va, vb = _tfidf_vector(ta, ix), _tfidf_vector(tb, ix)

    if theta >= 1.0:
        total = sum(va[w] * vb[w] for w in va.keys() & vb.keys())
        return min(1.0, max(0.0, total))

    wa, wb = list(va), list(vb)
    pairs = []
    for i, w in enumerate(wa):
        for j, v in enumerate(wb):
            sim = 1.0 if w == v else inner(w, v)
            if sim >= theta:
                pairs.append((-sim, i, j))
    pairs.sort()
    used_a, used_b = set(), set()
    total = 0.0
    for neg_sim, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        total += va[wa[i]] * vb[wb[j]] * -neg_sim
    return min(1.0, max(0.0, total))


def _date_score(x: tuple, y: tuple) -> float:
    if x == y:
        return 1.0
    if x[0] == y[0] and x[1] is not None and x[1] == y[1]:
        return 0.9
    if x[0] == y[0]:
        return 0.7
    return 0.0


def _number_score(x: float, y: float) -> float:
    scale = max(abs(x), abs(y))
    if scale == 0:
        return 1.0
    return 1.0 if abs(x - y) / scale <= 1e-3 else 0.0


def property_score(
    qval: ValueLiteral,
    vals: Sequence[ValueLiteral],
    datatype: str,
    entity_name: Callable[[str], str | None] | None = None,
) -> float:
    """Best score of ``qval`` against any stored value of one property.

    For entity-valued properties a query :class:`Text` matches by id, or by
    normalized name when ``entity_name`` can resolve the stored reference.
    Raises ``ValueError`` when there are stored values and ``qval`` does not
    parse as a date or number.
    """
    if not vals:
        return 0.0
    if isinstance(qval, Text) and datatype == "date":
        qdate = parse_date(qval.value)
    elif isinstance(qval, Text) and datatype == "number":
        qnum = parse_number(qval.value)

    best = 0.0
    for v in vals:
        if datatype == "entity" or isinstance(v, EntityRef) or isinstance(qval, EntityRef):
            vid = v.id if isinstance(v, EntityRef) else v.value
            if isinstance(qval, EntityRef):
                s = float(qval.id == vid)
            elif qval.value.strip() == vid:
                s = 1.0
            else:
                name = entity_name(vid) if entity_name else None
                s = float(name is not None and normalize(name) == normalize(qval.value))
        elif datatype == "date":
            try:
                s = _date_score(qdate, parse_date(v.value))
            except ValueError:
                s = 0.0
        elif datatype == "number":
            try:
                s = _number_score(qnum, parse_number(v.value))
            except ValueError:
                s = 0.0
        elif normalize(qval.value) == normalize(v.value):
            s = 1.0
        else:
            s = levenshtein_similarity(qval.value, v.value)
        best = max(best, s)
        if best == 1.0:
            break
    return best


def popularity_score(e: EntityRecord, max_pop: float) -> float:
    """Log-scaled popularity; 0.5 when the entity has none recorded."""
    pop = e.popularity
    if pop is None:
        return 0.5
    if pop < 0:
        raise ValueError(f"negative popularity {pop} on {e.id!r}")
    if max_pop <= 0:
        return 0.0
    return min(1.0, math.log1p(pop) / math.log1p(max_pop))


def property_feature_name(pid: str, ix: IndexedDataset) -> str:
    prop = ix.dataset.properties.get(pid)
    return f"Property: {prop.name if prop else pid}"


def score_fields(
    query: ReconciliationQuery,
    e: EntityRecord,
    ix: IndexedDataset,
    theta: float = DEFAULT_THETA,
) -> list[FeatureScore]:
    """Feature vector comparing ``query`` with entity ``e``.

    Order is fixed: the three name features, one ``prop:<pid>`` per distinct
    constrained property in query order (best over repeated values),
    ``popularity``, then ``type_match``. An unknown property id or an
    unparseable query value yields a 0 feature carrying a warning rather than
    an exception.
    """
    d = ix.dataset
    features = [
        FeatureScore(NAME_FEATURES[0][0], NAME_FEATURES[0][1], soft_tfidf(query.s, e.name, ix, theta)),
        FeatureScore(NAME_FEATURES[1][0], NAME_FEATURES[1][1], levenshtein_similarity(query.s, e.name)),
        FeatureScore(NAME_FEATURES[2][0], NAME_FEATURES[2][1], qgram_similarity(query.s, e.name, ix.q)),
    ]

    def resolve(eid):
        ref = d.get_entity(eid)
        return ref.name if ref else None

    grouped: dict[str, list] = {}
    for pid, qval in query.m:
        grouped.setdefault(pid, []).append(qval)
    for pid, qvals in grouped.items():
        fid = f"prop:{pid}"
        prop = d.properties.get(pid)
        if prop is None:
            features.append(FeatureScore(fid, f"Property: {pid}", 0.0, warning="unknown property"))
            continue
        stored = e.properties.get(pid, ())
        try:
            value = max(property_score(qv, stored, prop.datatype, resolve) for qv in qvals)
        except ValueError as exc:
            features.append(FeatureScore(fid, f"Property: {prop.name}", 0.0, warning=str(exc)))
            continue
        features.append(FeatureScore(fid, f"Property: {prop.name}", value))

    features.append(FeatureScore(POPULARITY_FEATURE[0], POPULARITY_FEATURE[1], popularity_score(e, ix.max_popularity)))
    constraint = frozenset(query.type_constraint)
    type_ok = not constraint or not e.types.isdisjoint(constraint)
    features.append(FeatureScore(TYPE_FEATURE[0], TYPE_FEATURE[1], float(type_ok)))
    return features


def feature_catalog(ix: IndexedDataset) -> list[tuple[str, str, str]]:
    """Every feature id :func:`score_fields` can emit for known properties, with docs."""
    catalog = list(NAME_FEATURES)
    for pid, prop in ix.dataset.properties.items():
        catalog.append((f"prop:{pid}", f"Property: {prop.name}", f"Score of the query value against {prop.datatype} property {pid!r}"))
    catalog += [POPULARITY_FEATURE, TYPE_FEATURE]
    return catalog
