"""The reconciliation service: batched reconcile with feature scores, suggest,
preview and data extension, plus the JSON wire format for each.

:class:`ReconciliationService` holds only immutable state after construction,
so one instance can serve concurrent requests without locking.
"""

from __future__ import annotations

import html
import json
import logging
from dataclasses import dataclass, field
from typing import Mapping

from reconkit.datamodel import Dataset, EntityRef, ReconciliationQuery, Text, TypeDef, ValueLiteral
from reconkit.fieldscore import DEFAULT_THETA, FeatureScore, feature_catalog, score_fields
from reconkit.globalscore import LinearModel, auto_match, linear_score, rank_candidates
from reconkit.index import IndexedDataset, build_index, retrieve_candidates
from reconkit.textproc import normalize

log = logging.getLogger(__name__)

BASE_WEIGHTS = {"name_softtfidf": 0.5, "name_levenshtein": 0.2, "type_match": 0.1, "popularity": 0.05}
PROPERTY_WEIGHT = 0.15
DEFAULT_THRESHOLD = 0.8
DEFAULT_GAP = 0.05
OVERFETCH = 4
SUGGEST_PAGE = 10
PREVIEW_PROPERTIES = 5


class ProtocolError(Exception):
    """Request the service cannot interpret at all (maps to HTTP 400)."""


@dataclass(frozen=True)
class Candidate:
    id: str
    name: str
    types: tuple
    score: float
    match: bool
    features: tuple

    def feature(self, fid: str) -> float | None:
        for f in self.features:
            if f.id == fid:
                return f.value
        return None


@dataclass(frozen=True)
class ServiceManifest:
    name: str
    identifier_space: str
    schema_space: str
    default_types: tuple
    view_url_template: str
    feature_catalog: tuple
    suggest: bool = True
    preview: bool = True
    extend: bool = True
    extra: Mapping = field(default_factory=dict, compare=False)

    @property
    def feature_ids(self) -> list[str]:
        return [fid for fid, _, _ in self.feature_catalog]

    def to_json(self, base_url: str = "") -> dict:
        doc = {
            "versions": ["0.2"],
            "name": self.name,
            "identifierSpace": self.identifier_space,
            "schemaSpace": self.schema_space,
            "defaultTypes": [{"id": t.id, "name": t.name} for t in self.default_types],
            "view": {"url": self.view_url_template},
            "feature_catalog": [{"id": i, "name": n, "description": doc} for i, n, doc in self.feature_catalog],
        }
        if self.preview:
            doc["preview"] = {"url": f"{base_url}/preview?id={{{{id}}}}", "width": 430, "height": 100}
        if self.suggest:
            doc["suggest"] = {
                kind: {"service_url": base_url, "service_path": f"/suggest/{kind}"}
                for kind in ("entity", "type", "property")
            }
        if self.extend:
            doc["extend"] = {
                "propose_properties": {"service_url": base_url, "service_path": "/suggest/property"},
            }
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "ServiceManifest":
        try:
            return cls(
                name=str(doc["name"]),
                identifier_space=str(doc["identifierSpace"]),
                schema_space=str(doc["schemaSpace"]),
                default_types=tuple(TypeDef(t["id"], t["name"]) for t in doc.get("defaultTypes", [])),
                view_url_template=str(doc.get("view", {}).get("url", "")),
                feature_catalog=tuple(
                    (f["id"], f.get("name", f["id"]), f.get("description", ""))
                    for f in doc.get("feature_catalog", [])
                ),
                suggest="suggest" in doc,
                preview="preview" in doc,
                extend="extend" in doc,
                extra={k: v for k, v in doc.items() if k not in _MANIFEST_KEYS},
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed manifest: {exc!r}") from exc


_MANIFEST_KEYS = {
    "name", "identifierSpace", "schemaSpace", "defaultTypes", "view",
    "feature_catalog", "suggest", "preview", "extend",
}


def default_model(
    property_features=(), threshold: float = DEFAULT_THRESHOLD, gap: float = DEFAULT_GAP
) -> LinearModel:
    """Default weighted sum; property features split their weight equally."""
    weights = dict(BASE_WEIGHTS)
    property_features = list(dict.fromkeys(property_features))
    for fid in property_features:
        weights[fid] = PROPERTY_WEIGHT / len(property_features)
    return LinearModel(weights, 0.0, threshold, gap)


# -- wire format -------------------------------------------------------------

def _value_from_json(v) -> ValueLiteral:
    if isinstance(v, Mapping):
        if "id" not in v:
            raise ValueError(f"entity value without id: {v!r}")
        return EntityRef(str(v["id"]))
    if isinstance(v, bool) or v is None or isinstance(v, (list, tuple)):
        raise ValueError(f"unsupported property value {v!r}")
    return Text(str(v))


def query_from_json(obj: Mapping) -> ReconciliationQuery:
    if not isinstance(obj, Mapping):
        raise ValueError("query must be a JSON object")
    s = obj.get("query", "")
    if not isinstance(s, str):
        raise ValueError("'query' must be a string")
    types = obj.get("type") or []
    if isinstance(types, str):
        types = [types]
    limit = obj.get("limit", 5)
    if isinstance(limit, bool) or not isinstance(limit, (int, str)):
        raise ValueError(f"bad limit {limit!r}")
    limit = int(limit)
    m = []
    for p in obj.get("properties", []) or []:
        pid = p.get("pid", p.get("p"))
        if not pid:
            raise ValueError(f"property constraint without pid: {p!r}")
        vs = p.get("v")
        for v in vs if isinstance(vs, list) else [vs]:
            m.append((str(pid), _value_from_json(v)))
    return ReconciliationQuery(s, tuple(str(t) for t in types), tuple(m), limit)


def query_to_json(q: ReconciliationQuery) -> dict:
    doc = {"query": q.s, "limit": q.limit}
    if q.type_constraint:
        doc["type"] = list(q.type_constraint)
    if q.m:
        doc["properties"] = [
            {"pid": pid, "v": {"id": v.id} if isinstance(v, EntityRef) else v.value} for pid, v in q.m
        ]
    return doc


def candidate_to_json(c: Candidate) -> dict:
    feats = []
    for f in c.features:
        fj = {"id": f.id, "name": f.name, "value": f.value}
        if f.warning:
            fj["warning"] = f.warning
        feats.append(fj)
    return {
        "id": c.id,
        "name": c.name,
        "type": [{"id": t.id, "name": t.name} for t in c.types],
        "score": c.score,
        "match": c.match,
        "features": feats,
    }


def candidate_from_json(obj: Mapping) -> Candidate:
    return Candidate(
        id=str(obj["id"]),
        name=str(obj.get("name", "")),
        types=tuple(TypeDef(t["id"], t.get("name", t["id"])) for t in obj.get("type", [])),
        score=float(obj.get("score", 0.0)),
        match=bool(obj.get("match", False)),
        features=tuple(
            FeatureScore(f["id"], f.get("name", f["id"]), float(f["value"]), f.get("warning"))
            for f in obj.get("features", [])
        ),
    )


def parse_queries_payload(text: str | bytes) -> dict:
    """Decode the ``queries`` form field into raw per-key JSON objects."""
    try:
        doc = json.loads(text)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"queries is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not doc:
        raise ProtocolError("queries must be a non-empty JSON object")
    return doc


def results_from_json(doc: Mapping) -> dict[str, list[Candidate]]:
    return {key: [candidate_from_json(c) for c in entry.get("result", [])] for key, entry in doc.items()}


# -- service -----------------------------------------------------------------

class ReconciliationService:
    def __init__(
        self,
        dataset: Dataset,
        q: int = 3,
        model: LinearModel | None = None,
        threshold: float = DEFAULT_THRESHOLD,
        gap: float = DEFAULT_GAP,
        theta: float = DEFAULT_THETA,
        view_url_template: str | None = None,
    ):
        self.dataset = dataset
        self.index: IndexedDataset = build_index(dataset, q)
        self.model = model
        self.threshold = threshold
        self.gap = gap
        self.theta = theta
        catalog = tuple(feature_catalog(self.index))
        self._manifest = ServiceManifest(
            name=dataset.name,
            identifier_space=dataset.identifier_space,
            schema_space=dataset.schema_space,
            default_types=tuple(dataset.types[t] for t in dataset.default_types),
            view_url_template=view_url_template or dataset.identifier_space.rstrip("/") + "/{{id}}",
            feature_catalog=catalog,
        )

    def get_manifest(self) -> ServiceManifest:
        return self._manifest

    def model_for(self, query: ReconciliationQuery) -> LinearModel:
        if self.model is not None:
            return self.model
        return default_model([f"prop:{pid}" for pid, _ in query.m], self.threshold, self.gap)

    def reconcile(self, query: ReconciliationQuery) -> list[Candidate]:
        if not normalize(query.s):
            return []
        model = self.model_for(query)
        entities = self.dataset.entities
        scored = {}
        for eid in retrieve_candidates(self.index, query, OVERFETCH * query.limit):
            feats = tuple(score_fields(query, entities[eid], self.index, self.theta))
            scored[eid] = (linear_score(feats, model), feats)
        ranked = rank_candidates((eid, s) for eid, (s, _) in scored.items())
        # decided on the full scored list so truncation cannot hide a close runner-up
        matched = auto_match(ranked, model)

        out = []
        for eid, score in ranked[: query.limit]:
            e = entities[eid]
            types = tuple(self.dataset.types[t] for t in sorted(e.types))
            out.append(Candidate(eid, e.name, types, score, eid == matched, scored[eid][1]))
        return out

    def reconcile_batch(self, queries: Mapping[str, ReconciliationQuery]) -> dict[str, list[Candidate]]:
        return {key: self.reconcile(q) for key, q in queries.items()}

    def handle_reconcile(self, payload: str | bytes) -> dict:
        """Full wire round: ``queries`` JSON text in, response document out.

        A query that fails to parse or score gets an empty result and an
        ``error`` note; its key is never dropped.
        """
        raw = parse_queries_payload(payload)
        response = {}
        for key, obj in raw.items():
            try:
                cands = self.reconcile(query_from_json(obj))
            except Exception as exc:  # one bad query must not sink the batch
                log.warning("query %r failed: %s", key, exc)
                response[key] = {"result": [], "error": str(exc)}
                continue
            response[key] = {"result": [candidate_to_json(c) for c in cands]}
        return response

    def suggest(self, kind: str, prefix: str, cursor: int = 0) -> list[tuple[str, str]]:
        if kind == "entity":
            items = ((e.id, e.name) for e in self.dataset.entities.values())
        elif kind == "type":
            items = ((t.id, t.name) for t in self.dataset.types.values())
        elif kind == "property":
            items = ((p.id, p.name) for p in self.dataset.properties.values())
        else:
            raise ProtocolError(f"unknown suggest kind {kind!r}")
        if cursor < 0:
            raise ProtocolError(f"cursor must be >= 0, got {cursor}")
        stem = normalize(prefix)
        hits = sorted(
            ((normalize(name), iid, name) for iid, name in items if normalize(name).startswith(stem)),
        )
        return [(iid, name) for _, iid, name in hits[cursor: cursor + SUGGEST_PAGE]]

    def preview(self, entity_id: str) -> tuple[int, str]:
        """``(status, html)``; unknown ids give a 404 fragment."""
        e = self.dataset.get_entity(entity_id)
        if e is None:
            return 404, (
                '<div style="width:430px;height:100px;font-family:sans-serif">'
                f"<p>Entity {html.escape(entity_id)} not found.</p></div>"
            )
        types = ", ".join(html.escape(self.dataset.types[t].name) for t in sorted(e.types))
        rows = []
        for pid, vals in e.properties.items():
            if len(rows) == PREVIEW_PROPERTIES:
                break
            label = html.escape(self.dataset.properties[pid].name)
            rows.append(f"<li><b>{label}:</b> {html.escape(', '.join(self._display(v) for v in vals))}</li>")
        return 200, (
            '<div style="width:430px;max-height:100px;overflow:hidden;font-family:sans-serif;font-size:12px">'
            f'<div style="font-weight:bold;font-size:14px">{html.escape(e.name)}</div>'
            f'<div style="color:#666">{html.escape(e.id)}{" · " + types if types else ""}</div>'
            f'<ul style="margin:2px 0;padding-left:16px">{"".join(rows)}</ul></div>'
        )

    def _display(self, v: ValueLiteral) -> str:
        if isinstance(v, EntityRef):
            ref = self.dataset.get_entity(v.id)
            return ref.name if ref else v.id
        return v.value

    def _cell(self, v: ValueLiteral) -> dict:
        if isinstance(v, EntityRef):
            return {"id": v.id, "name": self._display(v)}
        return {"str": v.value}

    def extend(self, ids: list[str], properties: list[str]) -> dict:
        unknown = [p for p in properties if p not in self.dataset.properties]
        if unknown:
            raise ProtocolError(f"unknown properties: {', '.join(unknown)}")
        meta = [{"id": p, "name": self.dataset.properties[p].name} for p in properties]
        rows = {}
        for eid in ids:
            e = self.dataset.get_entity(eid)
            rows[eid] = {
                p: [self._cell(v) for v in (e.properties.get(p, ()) if e else ())] for p in properties
            }
        return {"meta": meta, "rows": rows}

    def handle_extend(self, payload: str | bytes) -> dict:
        try:
            doc = json.loads(payload)
            ids = [str(i) for i in doc.get("ids", [])]
            props = [str(p["id"]) if isinstance(p, Mapping) else str(p) for p in doc.get("properties", [])]
        except (TypeError, ValueError, KeyError, AttributeError) as exc:
            raise ProtocolError(f"malformed extend request: {exc}") from None
        return self.extend(ids, props)
