"""Entity reconciliation over a tabular dataset.

The package is split along the matching pipeline: :mod:`datamodel` loads the
authoritative dataset, :mod:`textproc` and :mod:`index` handle normalization
and candidate retrieval, :mod:`fieldscore` computes per-field feature scores,
:mod:`globalscore` turns features into decisions, :mod:`service` exposes the
reconciliation API and :mod:`client` drives batch matching against it.
"""

from reconkit.datamodel import (
    Dataset,
    EntityRecord,
    EntityRef,
    PropertyDef,
    ReconciliationQuery,
    Text,
    TypeDef,
    load_dataset,
)
from reconkit.fieldscore import FeatureScore, score_fields, soft_tfidf
from reconkit.globalscore import LinearModel, Leaf, Node, auto_match, linear_score, tree_decide
from reconkit.index import IndexedDataset, build_index, retrieve_candidates
from reconkit.service import Candidate, ReconciliationService

__all__ = [
    "Candidate",
    "Dataset",
    "EntityRecord",
    "EntityRef",
    "FeatureScore",
    "IndexedDataset",
    "Leaf",
    "LinearModel",
    "Node",
    "PropertyDef",
    "ReconciliationQuery",
    "ReconciliationService",
    "Text",
    "TypeDef",
    "auto_match",
    "build_index",
    "linear_score",
    "load_dataset",
    "retrieve_candidates",
    "score_fields",
    "soft_tfidf",
    "tree_decide",
]

__version__ = "0.1.0"
