"""
Comparing names: edit distance, q-grams and SoftTFIDF
======================================================

Three families of name similarity on a five-company register, and why
weighting tokens by rarity matters.
"""

import pathlib

from reconkit.datamodel import load_dataset_files
from reconkit.fieldscore import levenshtein_similarity, qgram_similarity, soft_tfidf
from reconkit.index import build_index
from reconkit.textproc import qgrams, soundex

DATA = pathlib.Path(__file__).parent / "data"

# Phonetic codes collapse spelling variants into one block key.
print("soundex:", soundex("Will"), soundex("Wil"), soundex("Robert"))

# Q-grams are the overlapping character windows of the normalized string.
print("trigrams of Oracle:", sorted(qgrams("Oracle", 3)))

dataset = load_dataset_files(str(DATA / "companies.csv"), str(DATA / "schema.json"))
ix = build_index(dataset)

# Character-level metrics think "Greentech Distribution" is about as close to
# "Globafrik Distribution" as to "Greentech Services"...
query = "Greentech Distribution"
for other in ["Greentech Services", "Globafrik Distribution"]:
    print(f"{other:25s} edit={levenshtein_similarity(query, other):.3f} "
          f"trigram={qgram_similarity(query, other):.3f} "
          f"softtfidf={soft_tfidf(query, other, ix):.4f}")

# ...while SoftTFIDF knows "distribution" appears in four of the five names
# and "greentech" in only two, so sharing "greentech" counts far more.
print({w: round(ix.idf(w), 4) for w in ["greentech", "distribution", "services"]})

# A misspelt word is unknown to the corpus and carries no idf weight, so
# SoftTFIDF only scores the correctly spelt part; the character metrics
# still see an almost identical string.
typo, target = "Greentehc Distribution", "greentech distribution"
print(f"typo: edit={levenshtein_similarity(typo, target):.3f} "
      f"trigram={qgram_similarity(typo, target):.3f} softtfidf={soft_tfidf(typo, target, ix):.4f}")
