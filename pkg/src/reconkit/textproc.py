"""String normalization, tokens, q-grams and Soundex codes."""

from __future__ import annotations

import re
import unicodedata
from collections import Counter

_NON_WORD = re.compile(r"[^\w\s]|_")
_SPACES = re.compile(r"\s+")

_SOUNDEX_CODES = {
    **dict.fromkeys("bfpv", "1"),
    **dict.fromkeys("cgjkqsxz", "2"),
    **dict.fromkeys("dt", "3"),
    "l": "4",
    **dict.fromkeys("mn", "5"),
    "r": "6",
}


def normalize(s: str) -> str:
    """Canonical form used by every comparison in the package.

    Compatibility-decomposes, drops combining marks, lowercases, maps
    punctuation to spaces and collapses whitespace.
    """
    s = unicodedata.normalize("NFKD", s)
    s = "".join(ch for ch in s if not unicodedata.combining(ch))
    s = s.lower()
    s = _NON_WORD.sub(" ", s)
    return _SPACES.sub(" ", s).strip()


def tokenize(s: str) -> list[str]:
    norm = normalize(s)
    return norm.split(" ") if norm else []


def qgrams(s: str, q: int) -> Counter:
    """Multiset of length-``q`` substrings of the despaced normalized string.

    No padding is added, so a string shorter than ``q`` yields an empty bag.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    flat = normalize(s).replace(" ", "")
    return Counter(flat[i:i + q] for i in range(len(flat) - q + 1))


def soundex(s: str) -> str:
    """Classic four-character American Soundex of the first token.

    Letters coded identically are merged when adjacent or separated only by
    ``h``/``w``; vowels break runs. Inputs without ASCII letters give ``"0000"``.
    """
    tokens = tokenize(s)
    if not tokens:
        return "0000"
    letters = [ch for ch in tokens[0] if "a" <= ch <= "z"]
    if not letters:
        return "0000"

    first = letters[0]
    digits = []
    prev = _SOUNDEX_CODES.get(first, "")
    for ch in letters[1:]:
        if ch in "hw":
            continue
        code = _SOUNDEX_CODES.get(ch, "")
        if code and code != prev:
            digits.append(code)
            if len(digits) == 3:
                break
        prev = code
    return (first.upper() + "".join(digits)).ljust(4, "0")
