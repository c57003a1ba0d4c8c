"""Entities, types, properties and dataset ingestion.

A dataset package is an entities CSV plus a JSON schema descriptor naming the
columns to read. Types and properties may come from their own CSV files or be
inlined in the schema; when neither is given they are inferred from the
entities table.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from typing import IO, Mapping, Union

DATATYPES = ("text", "date", "number", "entity")

_DATE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$")


class DatasetError(Exception):
    pass


class ParseError(DatasetError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class IntegrityError(DatasetError):
    def __init__(self, message: str, offender: str):
        self.offender = offender
        super().__init__(message)


class LookupFailure(DatasetError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


@dataclass(frozen=True)
class Text:
    value: str


@dataclass(frozen=True)
class EntityRef:
    id: str


ValueLiteral = Union[Text, EntityRef]


@dataclass(frozen=True)
class TypeDef:
    id: str
    name: str


@dataclass(frozen=True)
class PropertyDef:
    id: str
    name: str
    datatype: str = "text"

    def __post_init__(self):
        if self.datatype not in DATATYPES:
            raise ValueError(f"unknown datatype {self.datatype!r} for property {self.id!r}")


@dataclass(frozen=True)
class EntityRecord:
    id: str
    name: str
    types: frozenset = frozenset()
    properties: Mapping[str, tuple] = field(default_factory=dict)
    popularity: float | None = None


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


@dataclass(frozen=True)
class ReconciliationQuery:
    s: str
    type_constraint: tuple = ()
    m: tuple = ()  # (property id, ValueLiteral) pairs
    limit: int = 5

    def __post_init__(self):
        if self.limit < 1:
            raise ValueError(f"limit must be >= 1, got {self.limit}")


@dataclass(frozen=True)
class Dataset:
    """Immutable authoritative dataset. Treat every mapping as read-only."""

    entities: Mapping[str, EntityRecord]
    types: Mapping[str, TypeDef]
    properties: Mapping[str, PropertyDef]
    name: str = "dataset"
    identifier_space: str = "http://example.org/entity/"
    schema_space: str = "http://example.org/property/"
    default_types: tuple = ()
    rejected: tuple = ()

    def __len__(self):
        return len(self.entities)

    def get_entity(self, entity_id: str) -> EntityRecord | None:
        return self.entities.get(entity_id)

    def eval(self, entity_id: str, property_id: str) -> list[ValueLiteral]:
        """Values of ``property_id`` on ``entity_id``; empty when unset."""
        if entity_id not in self.entities:
            raise LookupFailure(f"unknown entity {entity_id!r}")
        if property_id not in self.properties:
            raise LookupFailure(f"unknown property {property_id!r}")
        return list(self.entities[entity_id].properties.get(property_id, ()))

    @property
    def max_popularity(self) -> float:
        pops = [e.popularity for e in self.entities.values() if e.popularity is not None]
        return max(pops, default=0.0)


def get_entity(d: Dataset, entity_id: str) -> EntityRecord | None:
    return d.get_entity(entity_id)


def parse_date(s: str) -> tuple:
    """``YYYY``, ``YYYY-MM`` or ``YYYY-MM-DD`` to a (year, month, day) tuple with ``None`` gaps."""
    m = _DATE.match(s.strip())
    if not m:
        raise ValueError(f"not an ISO date: {s!r}")
    year, month, day = (int(g) if g else None for g in m.groups())
    if month is not None and not 1 <= month <= 12:
        raise ValueError(f"month out of range: {s!r}")
    if day is not None and not 1 <= day <= 31:
        raise ValueError(f"day out of range: {s!r}")
    return year, month, day


def parse_number(s: str) -> float:
    x = float(s)
    if not math.isfinite(x):
        raise ValueError(f"not a finite number: {s!r}")
    return x


def _read_csv(source, what: str) -> tuple[list[str], list[tuple[int, list[str]]]]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    raw = source.read()
    text = raw.decode("utf-8-sig") if isinstance(raw, (bytes, bytearray)) else raw
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    rows = []
    try:
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{what}: missing header row", 1)
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{what}: expected {len(header)} fields, got {len(row)}", reader.line_num
                )
            rows.append((reader.line_num, row))
    except csv.Error as exc:
        raise ParseError(f"{what}: {exc}", reader.line_num) from exc
    return header, rows


def _column(header: list[str], name: str, what: str) -> int:
    try:
        return header.index(name)
    except ValueError:
        raise ParseError(f"{what}: column {name!r} not in header", 1) from None


def _split_cell(cell: str, delimiter: str) -> list[str]:
    return [part.strip() for part in cell.split(delimiter) if part.strip()]


def _load_types(source) -> dict[str, TypeDef]:
    header, rows = _read_csv(source, "types")
    id_col, name_col = _column(header, "id", "types"), _column(header, "name", "types")
    types = {}
    for line, row in rows:
        tid = row[id_col].strip()
        if tid in types:
            raise IntegrityError(f"duplicate type id {tid!r}", tid)
        types[tid] = TypeDef(tid, row[name_col].strip() or tid)
    return types


def _load_properties(source) -> dict[str, PropertyDef]:
    header, rows = _read_csv(source, "properties")
    cols = {c: _column(header, c, "properties") for c in ("id", "name")}
    dt_col = header.index("datatype") if "datatype" in header else None
    props = {}
    for line, row in rows:
        pid = row[cols["id"]].strip()
        if pid in props:
            raise IntegrityError(f"duplicate property id {pid!r}", pid)
        datatype = row[dt_col].strip() if dt_col is not None else "text"
        try:
            props[pid] = PropertyDef(pid, row[cols["name"]].strip() or pid, datatype or "text")
        except ValueError as exc:
            raise ParseError(str(exc), line) from None
    return props


def load_dataset(
    source: IO[bytes] | bytes,
    schema: Mapping | str | bytes,
    *,
    types: IO[bytes] | bytes | None = None,
    properties: IO[bytes] | bytes | None = None,
) -> Dataset:
    """Read an entities CSV under ``schema`` into a :class:`Dataset`.

    Rows with an empty id or name, or with a value that does not parse under
    its property's datatype, are skipped and listed in ``Dataset.rejected``.
    Duplicate ids, unknown type ids and dangling entity references raise
    :class:`IntegrityError`; malformed CSV raises :class:`ParseError`.
    """
    if isinstance(schema, (str, bytes)):
        schema = json.loads(schema)
    delimiter = schema.get("multi_value_delimiter", "|")

    header, rows = _read_csv(source, "entities")
    id_col = _column(header, schema["id_column"], "entities")
    name_col = _column(header, schema["name_column"], "entities")
    type_cols = [_column(header, c, "entities") for c in schema.get("type_columns", [])]
    pop_name = schema.get("popularity_column")
    pop_col = _column(header, pop_name, "entities") if pop_name else None

    type_table = _load_types(types) if types is not None else None
    if type_table is None and "types" in schema:
        type_table = {t["id"]: TypeDef(t["id"], t.get("name", t["id"])) for t in schema["types"]}
    prop_table = _load_properties(properties) if properties is not None else {}

    bindings = []
    for col in schema.get("property_columns", []):
        pid = col.get("property_id", col["column"])
        if pid not in prop_table:
            prop_table[pid] = PropertyDef(pid, col.get("name", pid), col.get("datatype", "text"))
        elif "datatype" in col and col["datatype"] != prop_table[pid].datatype:
            raise IntegrityError(
                f"property {pid!r} declared as {col['datatype']} but table says "
                f"{prop_table[pid].datatype}",
                pid,
            )
        bindings.append((_column(header, col["column"], "entities"), prop_table[pid]))

    entities: dict[str, EntityRecord] = {}
    rejected = []
    seen_types = {}
    for line, row in rows:
        eid, name = row[id_col].strip(), row[name_col].strip()
        if not eid:
            rejected.append(RejectedRow(line, "empty id"))
            continue
        if not name:
            rejected.append(RejectedRow(line, f"empty name for {eid!r}"))
            continue
        if eid in entities:
            raise IntegrityError(f"duplicate entity id {eid!r} at line {line}", eid)

        etypes = set()
        for c in type_cols:
            etypes.update(_split_cell(row[c], delimiter))
        for t in etypes:
            if type_table is not None and t not in type_table:
                raise IntegrityError(f"unknown type id {t!r} on entity {eid!r}", t)
            seen_types.setdefault(t, TypeDef(t, t))

        values: dict[str, tuple] = {}
        problem = None
        for col, prop in bindings:
            cells = _split_cell(row[col], delimiter)
            if not cells:
                continue
            try:
                values[prop.id] = values.get(prop.id, ()) + tuple(_literal(c, prop) for c in cells)
            except ValueError as exc:
                problem = f"property {prop.id!r}: {exc}"
                break

        popularity = None
        if problem is None and pop_col is not None and row[pop_col].strip():
            try:
                popularity = parse_number(row[pop_col])
                if popularity < 0:
                    problem = f"negative popularity {popularity}"
            except ValueError:
                problem = f"bad popularity {row[pop_col]!r}"
        if problem is not None:
            rejected.append(RejectedRow(line, problem))
            continue

        entities[eid] = EntityRecord(eid, name, frozenset(etypes), values, popularity)

    for e in entities.values():
        for vals in e.properties.values():
            for v in vals:
                if isinstance(v, EntityRef) and v.id not in entities:
                    raise IntegrityError(f"entity {e.id!r} references unknown entity {v.id!r}", v.id)

    type_table = type_table if type_table is not None else dict(sorted(seen_types.items()))
    default_types = tuple(schema.get("default_types", list(type_table)))
    for t in default_types:
        if t not in type_table:
            raise IntegrityError(f"default type {t!r} is not a declared type", t)

    return Dataset(
        entities=entities,
        types=type_table,
        properties=prop_table,
        name=schema.get("name", "dataset"),
        identifier_space=schema.get("identifier_space", Dataset.identifier_space),
        schema_space=schema.get("schema_space", Dataset.schema_space),
        default_types=default_types,
        rejected=tuple(rejected),
    )


def _literal(cell: str, prop: PropertyDef) -> ValueLiteral:
    if prop.datatype == "entity":
        return EntityRef(cell)
    if prop.datatype == "number":
        parse_number(cell)
    elif prop.datatype == "date":
        parse_date(cell)
    return Text(cell)


def load_dataset_files(data_path: str, schema_path: str) -> Dataset:
    """Load a dataset package from disk.

    ``types_file`` and ``properties_file`` keys in the schema are resolved
    relative to the schema's directory.
    """
    import os

    with open(schema_path, encoding="utf-8") as fh:
        schema = json.load(fh)
    base = os.path.dirname(os.path.abspath(schema_path))
    extra = {}
    for key, arg in (("types_file", "types"), ("properties_file", "properties")):
        if schema.get(key):
            with open(os.path.join(base, schema[key]), "rb") as fh:
                extra[arg] = fh.read()
    with open(data_path, "rb") as fh:
        return load_dataset(fh, schema, **extra)


def dump_entities(d: Dataset, schema: Mapping) -> bytes:
    """Serialize entities back to CSV under ``schema`` (inverse of :func:`load_dataset`)."""
    delimiter = schema.get("multi_value_delimiter", "|")
    type_cols = list(schema.get("type_columns", []))
    prop_cols = [(s["column"], s.get("property_id", s["column"])) for s in schema.get("property_columns", [])]
    pop_col = schema.get("popularity_column")

    header = [schema["id_column"], schema["name_column"], *type_cols, *(c for c, _ in prop_cols)]
    if pop_col:
        header.append(pop_col)
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for e in d.entities.values():
        row = [e.id, e.name]
        # all types go in the first type column
        row += [delimiter.join(sorted(e.types)) if i == 0 else "" for i in range(len(type_cols))]
        for _, pid in prop_cols:
            row.append(delimiter.join(_cell_text(v) for v in e.properties.get(pid, ())))
        if pop_col:
            row.append("" if e.popularity is None else repr(e.popularity))
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def _cell_text(v: ValueLiteral) -> str:
    return v.id if isinstance(v, EntityRef) else v.value

