"""Batch reconciliation client with client-side decision models.

Rows of a user CSV are sent to a reconciliation service in small batches.
The returned feature scores are re-scored locally with the user's own
:class:`~reconkit.globalscore.LinearModel` or decision tree, so the service's
own global score only matters for tree models (which do not produce one).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import requests

from reconkit.datamodel import ReconciliationQuery, Text
from reconkit.globalscore import (
    DecisionModel,
    LinearModel,
    auto_match,
    linear_score,
    load_model,
    model_features,
    rank_candidates,
    tree_decide,
)
from reconkit.service import Candidate, ServiceManifest, query_to_json, results_from_json

log = logging.getLogger(__name__)

AUTO = "auto"
BELOW_THRESHOLD = "below-threshold"
AMBIGUOUS = "ambiguous"
NO_CANDIDATE = "no-candidate"

Transport = Callable[[dict], dict]


class ServiceError(Exception):
    pass


@dataclass
class UserTable:
    columns: list[str]
    rows: list[dict[str, str]]
    name_column: str
    type_id: str | None = None
    bindings: dict[str, str] = field(default_factory=dict)  # column -> property id
    truth_column: str | None = None

    def __post_init__(self):
        needed = [self.name_column, *self.bindings]
        if self.truth_column:
            needed.append(self.truth_column)
        missing = [c for c in needed if c not in self.columns]
        if missing:
            raise ValueError(f"columns not in table: {', '.join(missing)}")

    @classmethod
    def from_csv(cls, source, name_column: str, **kwargs) -> "UserTable":
        if isinstance(source, (bytes, bytearray)):
            source = source.decode("utf-8-sig")
        elif not isinstance(source, str):
            source = source.read()
            if isinstance(source, bytes):
                source = source.decode("utf-8-sig")
        reader = csv.DictReader(io.StringIO(source, newline=""))
        rows = [{k: (v or "") for k, v in row.items()} for row in reader]
        return cls(list(reader.fieldnames or []), rows, name_column, **kwargs)

    def query_for(self, row: Mapping[str, str], limit: int = 5) -> ReconciliationQuery:
        m = []
        for col, pid in self.bindings.items():
            cell = row.get(col, "").strip()
            if cell:
                m.append((pid, Text(cell)))
        types = (self.type_id,) if self.type_id else ()
        return ReconciliationQuery(row.get(self.name_column, ""), types, tuple(m), limit)

    def truth_for(self, row: Mapping[str, str]) -> str | None:
        if not self.truth_column:
            return None
        return row.get(self.truth_column, "").strip()


@dataclass
class MatchResult:
    """Outcome for one input row.

    ``candidates`` are re-ranked by the client model; for linear models their
    ``score`` is the client score and ``match`` marks the client's choice.
    ``truth_id`` is ``None`` without a truth column and ``""`` for a row
    known to have no match.
    """

    row: int
    matched_id: str | None
    matched_name: str | None
    score: float | None
    decision: str
    candidates: list[Candidate] = field(default_factory=list)
    truth_id: str | None = None
    error: str | None = None


@dataclass
class SweepPoint:
    threshold: float
    matched: int
    unmatched: int
    ambiguous: int
    precision: float | None = None
    recall: float | None = None


@dataclass
class SweepReport:
    points: list[SweepPoint]
    has_truth: bool = False

    def to_json(self) -> dict:
        out = []
        for p in self.points:
            entry = {"threshold": p.threshold, "matched": p.matched, "unmatched": p.unmatched, "ambiguous": p.ambiguous}
            if self.has_truth:
                entry["precision"] = p.precision
                entry["recall"] = p.recall
            out.append(entry)
        return {"sweep": out}


def decide(candidates: Sequence[Candidate], model: DecisionModel):
    """Re-rank ``candidates`` under ``model``; returns ``(ranked, matched_id, decision)``."""
    if not candidates:
        return [], None, NO_CANDIDATE
    if isinstance(model, LinearModel):
        by_id = {c.id: c for c in candidates}
        ranked = rank_candidates((c.id, linear_score(c.features, model)) for c in candidates)
        matched = auto_match(ranked, model)
        out = [replace(by_id[i], score=s, match=(i == matched)) for i, s in ranked]
        if matched is not None:
            return out, matched, AUTO
        return out, None, BELOW_THRESHOLD if ranked[0][1] < model.threshold else AMBIGUOUS

    by_id = {c.id: c for c in candidates}
    ranked = rank_candidates((c.id, c.score) for c in candidates)
    top = by_id[ranked[0][0]]
    hit = tree_decide(top.features, model)
    out = [replace(by_id[i], match=(hit and i == top.id)) for i, _ in ranked]
    return out, (top.id if hit else None), AUTO if hit else BELOW_THRESHOLD


def http_transport(url: str, timeout: float = 30.0, session: requests.Session | None = None) -> Transport:
    sess = session or requests.Session()

    def send(queries: dict) -> dict:
        resp = sess.post(url, data={"queries": json.dumps(queries)}, timeout=timeout)
        if resp.status_code != 200:
            raise ServiceError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        doc = resp.json()
        if not isinstance(doc, dict):
            raise ServiceError("reconcile response is not a JSON object")
        return doc

    return send


def send_with_retry(transport: Transport, queries: dict, retries: int = 3, backoff: float = 0.5) -> dict:
    """Call ``transport``, retrying up to ``retries`` times with exponential backoff."""
    for attempt in range(retries + 1):
        try:
            doc = transport(queries)
            missing = set(queries) - set(doc)
            if missing:
                raise ServiceError(f"response lacks keys {sorted(missing)}")
            return doc
        except (requests.RequestException, ServiceError, ValueError) as exc:
            if attempt == retries:
                raise ServiceError(f"batch failed after {retries + 1} attempts: {exc}") from exc
            delay = backoff * 2 ** attempt
            log.warning("batch attempt %d failed (%s); retrying in %.2fs", attempt + 1, exc, delay)
            time.sleep(delay)


def run_reconcile(
    table: UserTable,
    service: str | Transport,
    model: DecisionModel,
    batch_size: int = 10,
    max_workers: int = 4,
    limit: int = 5,
    retries: int = 3,
    backoff: float = 0.5,
) -> list[MatchResult]:
    """Reconcile every row of ``table``; result ``i`` belongs to row ``i``.

    ``service`` is the reconcile endpoint URL or a transport callable taking
    the ``queries`` mapping and returning the decoded response. A batch that
    still fails after its retries marks its rows ``no-candidate`` with an
    error note instead of aborting the run.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    transport = http_transport(service) if isinstance(service, str) else service
    batches = [range(i, min(i + batch_size, len(table.rows))) for i in range(0, len(table.rows), batch_size)]

    def run_batch(idx: range) -> list[MatchResult]:
        queries = {f"q{i}": query_to_json(table.query_for(table.rows[i], limit)) for i in idx}
        try:
            doc = send_with_retry(transport, queries, retries, backoff)
        except ServiceError as exc:
            log.error("giving up on rows %d-%d: %s", idx.start, idx.stop - 1, exc)
            return [
                MatchResult(i, None, None, None, NO_CANDIDATE, truth_id=table.truth_for(table.rows[i]), error=str(exc))
                for i in idx
            ]
        out = []
        for i in idx:
            entry = doc[f"q{i}"]
            truth = table.truth_for(table.rows[i])
            try:
                cands = results_from_json({"k": entry})["k"]
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                out.append(MatchResult(i, None, None, None, NO_CANDIDATE, truth_id=truth, error=f"bad result: {exc}"))
                continue
            ranked, matched, decision = decide(cands, model)
            name = ranked[0].name if matched else None
            score = ranked[0].score if ranked else None
            out.append(MatchResult(i, matched, name, score, decision, ranked, truth, entry.get("error")))
        return out

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        chunks = list(pool.map(run_batch, batches))
    return [r for chunk in chunks for r in chunk]


def sweep(results: Sequence[MatchResult], model: LinearModel, thresholds: Sequence[float]) -> SweepReport:
    """Re-decide every result at each threshold from the stored features."""
    has_truth = any(r.truth_id is not None for r in results)
    positives = sum(1 for r in results if r.truth_id)
    points = []
    for t in thresholds:
        m = model.with_threshold(t)
        matched = unmatched = ambiguous = correct = 0
        for r in results:
            _, hit, decision = decide(r.candidates, m)
            if decision == AUTO:
                matched += 1
                correct += bool(r.truth_id) and hit == r.truth_id
            elif decision == AMBIGUOUS:
                ambiguous += 1
            else:
                unmatched += 1
        point = SweepPoint(t, matched, unmatched, ambiguous)
        if has_truth:
            point.precision = correct / matched if matched else None
            point.recall = correct / positives if positives else None
        points.append(point)
    return SweepReport(points, has_truth)


def write_output(results: Sequence[MatchResult], table: UserTable, feature_ids: Sequence[str] | None = None) -> bytes:
    """Input table with match columns and the top candidate's features appended."""
    if feature_ids is None:
        feature_ids = list(dict.fromkeys(f.id for r in results for c in r.candidates[:1] for f in c.features))
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*table.columns, "matched_id", "matched_name", "matched_score", "decision",
                     *(f"feature:{fid}" for fid in feature_ids)])
    for row, r in zip(table.rows, results):
        top = {f.id: f.value for f in r.candidates[0].features} if r.candidates else {}
        writer.writerow([
            *(row.get(c, "") for c in table.columns),
            r.matched_id or "",
            r.matched_name or "",
            "" if r.score is None else repr(round(r.score, 6)),
            r.decision,
            *("" if fid not in top else repr(round(top[fid], 6)) for fid in feature_ids),
        ])
    return buf.getvalue().encode("utf-8")


def fetch_manifest_and_validate(
    service_url: str, model: DecisionModel | None = None, timeout: float = 10.0
) -> ServiceManifest:
    """Fetch the service manifest and warn about model features it does not document."""
    try:
        resp = requests.get(service_url, timeout=timeout)
        resp.raise_for_status()
        manifest = ServiceManifest.from_json(resp.json())
    except (requests.RequestException, ValueError) as exc:
        raise ServiceError(f"cannot use service at {service_url}: {exc}") from exc
    if model is not None:
        known = set(manifest.feature_ids)
        unknown = sorted(model_features(model) - known)
        if unknown:
            warnings.warn(
                f"model uses features the service does not document (read as 0): {', '.join(unknown)}",
                stacklevel=2,
            )
    return manifest


def _parse_binding(text: str) -> tuple[str, str]:
    col, sep, pid = text.partition("=")
    if not sep or not col or not pid:
        raise argparse.ArgumentTypeError(f"expected <column>=<property-id>, got {text!r}")
    return col, pid


def _parse_thresholds(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None


def main(argv=None):
    parser = argparse.ArgumentParser(prog="reconcile-client", description="Match a CSV table against a reconciliation service.")
    parser.add_argument("--input", required=True, help="user table CSV")
    parser.add_argument("--name-column", required=True)
    parser.add_argument("--type", dest="type_id")
    parser.add_argument("--bind", type=_parse_binding, action="append", default=[], metavar="COL=PID")
    parser.add_argument("--truth", help="column holding the known correct entity id")
    parser.add_argument("--service", required=True, help="reconciliation endpoint URL")
    parser.add_argument("--model", required=True, help="decision model JSON")
    parser.add_argument("--batch", type=int, default=10)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--sweep", type=_parse_thresholds, help="comma-separated thresholds")
    parser.add_argument("--output", required=True)
    parser.add_argument("--report", help="write the sweep report JSON here")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    model = load_model(args.model)
    if (args.sweep or args.report) and not isinstance(model, LinearModel):
        parser.error("--sweep/--report need a linear model")
    try:
        manifest = fetch_manifest_and_validate(args.service, model)
    except ServiceError as exc:
        log.error("%s", exc)
        return 2
    with open(args.input, "rb") as fh:
        table = UserTable.from_csv(
            fh.read(), args.name_column, type_id=args.type_id, bindings=dict(args.bind), truth_column=args.truth
        )

    results = run_reconcile(table, args.service, model, batch_size=args.batch, max_workers=args.workers)
    with open(args.output, "wb") as fh:
        fh.write(write_output(results, table, manifest.feature_ids))

    counts = {}
    for r in results:
        counts[r.decision] = counts.get(r.decision, 0) + 1
    log.info("%d rows: %s", len(results), ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))

    if args.report or args.sweep:
        report = sweep(results, model, args.sweep or [model.threshold])
        text = json.dumps(report.to_json(), indent=2)
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
