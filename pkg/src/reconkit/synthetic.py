"""Reproducible synthetic company registers for benchmarks and demos."""

from __future__ import annotations

import csv
import io
import random

SYLLABLES = ["gre", "en", "tech", "glo", "ba", "frik", "ac", "me", "nor", "dia", "sol", "ven", "tri", "lux",
             "ka", "ro", "mi", "del", "ta", "zen", "or", "vo", "pan", "qui"]
SUFFIXES = ["distribution", "services", "holdings", "group", "logistics", "energy", "foods", "systems",
            "partners", "trading", "labs", "consulting"]
JURISDICTIONS = ["gb", "fr", "de", "us", "ng", "in", "br", "jp"]

SCHEMA = {
    "name": "Synthetic register",
    "id_column": "id",
    "name_column": "name",
    "type_columns": ["type"],
    "types": [{"id": "company", "name": "Company"}, {"id": "charity", "name": "Charity"}],
    "property_columns": [
        {"column": "jurisdiction", "property_id": "jurisdiction", "name": "Jurisdiction", "datatype": "text"},
        {"column": "founded", "property_id": "founded", "name": "Founding date", "datatype": "date"},
    ],
    "popularity_column": "revenue",
}


def random_word(rng: random.Random) -> str:
    return "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3)))


def synthetic_rows(n: int, seed: int = 0) -> list[dict[str, str]]:
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        words = [random_word(rng) for _ in range(rng.randint(1, 2))] + [rng.choice(SUFFIXES)]
        rows.append({
            "id": f"c{i:05d}",
            "name": " ".join(words),
            "type": rng.choice(["company", "company", "charity", ""]),
            "jurisdiction": rng.choice(JURISDICTIONS),
            "founded": f"{rng.randint(1900, 2020)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
            "revenue": "" if rng.random() < 0.2 else str(rng.randint(0, 10**7)),
        })
    return rows


def synthetic_csv(n: int, seed: int = 0) -> bytes:
    rows = synthetic_rows(n, seed)
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, fieldnames=["id", "name", "type", "jurisdiction", "founded", "revenue"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def perturb(name: str, rng: random.Random) -> str:
    """A noisy variant of ``name``: a typo, a dropped word, or case changes."""
    roll = rng.random()
    if roll < 0.3 and len(name) > 3:
        i = rng.randrange(len(name))
        return name[:i] + rng.choice("abcdefghijklmnopqrstuvwxyz") + name[i + 1:]
    if roll < 0.5 and " " in name:
        words = name.split()
        del words[rng.randrange(len(words))]
        return " ".join(words)
    if roll < 0.7:
        return name.upper()
    return name.title()
