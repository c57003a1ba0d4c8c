"""Global scoring and match decisions over feature vectors."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence, Union

from reconkit.fieldscore import FeatureScore


@dataclass(frozen=True)
class LinearModel:
    weights: Mapping[str, float]
    bias: float = 0.0
    threshold: float = 0.8
    gap: float = 0.05

    def __post_init__(self):
        if not any(w != 0 for w in self.weights.values()):
            raise ValueError("linear model needs at least one nonzero weight")
        if not math.isfinite(self.threshold):
            raise ValueError(f"threshold must be finite, got {self.threshold}")
        if self.gap < 0:
            raise ValueError(f"gap must be >= 0, got {self.gap}")

    def with_threshold(self, threshold: float) -> "LinearModel":
        return replace(self, threshold=threshold)


@dataclass(frozen=True)
class Leaf:
    match: bool


@dataclass(frozen=True)
class Node:
    """Internal tree node: values below ``threshold`` take the ``low`` branch."""

    feature: str
    threshold: float
    low: "Node | Leaf"
    high: "Node | Leaf"


DecisionTree = Union[Node, Leaf]
DecisionModel = Union[LinearModel, Node, Leaf]


def _values(features: Iterable[FeatureScore]) -> dict[str, float]:
    return {f.id: f.value for f in features}


def linear_score(features: Sequence[FeatureScore], m: LinearModel) -> float:
    """``bias + sum(weight * value)``; features without a weight are ignored."""
    return m.bias + sum(m.weights[f.id] * f.value for f in features if f.id in m.weights)


def tree_decide(features: Sequence[FeatureScore], t: DecisionTree) -> bool:
    values = _values(features)
    node = t
    while isinstance(node, Node):
        node = node.low if values.get(node.feature, 0.0) < node.threshold else node.high
    return node.match


def rank_candidates(cands: Iterable[tuple[str, float]]) -> list[tuple[str, float]]:
    """Descending score, ties broken by ascending id."""
    return sorted(cands, key=lambda c: (-c[1], c[0]))


def auto_match(ranked: Sequence[tuple[str, float]], m: LinearModel) -> str | None:
    """Top id when it clears ``m.threshold`` and leads the runner-up by ``m.gap``."""
    if not ranked:
        return None
    top_id, top = ranked[0]
    if top < m.threshold:
        return None
    if len(ranked) > 1 and top - ranked[1][1] < m.gap:
        return None
    return top_id


def tree_features(t: DecisionTree) -> set[str]:
    if isinstance(t, Leaf):
        return set()
    return {t.feature} | tree_features(t.low) | tree_features(t.high)


def model_features(model: DecisionModel) -> set[str]:
    if isinstance(model, LinearModel):
        return {k for k, w in model.weights.items() if w != 0}
    return tree_features(model)


def _tree_from_json(obj: Mapping, depth: int = 0) -> DecisionTree:
    if depth > 64:
        raise ValueError("decision tree too deep")
    if "match" in obj:
        return Leaf(bool(obj["match"]))
    return Node(
        str(obj["feature"]),
        float(obj["threshold"]),
        _tree_from_json(obj["low"], depth + 1),
        _tree_from_json(obj["high"], depth + 1),
    )


def _tree_to_json(t: DecisionTree) -> dict:
    if isinstance(t, Leaf):
        return {"match": t.match}
    return {"feature": t.feature, "threshold": t.threshold, "low": _tree_to_json(t.low), "high": _tree_to_json(t.high)}


def model_from_json(obj: Mapping | str | bytes) -> DecisionModel:
    """Parse ``{"linear": {...}}`` or ``{"tree": {...}}``."""
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if "linear" in obj:
        lin = obj["linear"]
        return LinearModel(
            weights={str(k): float(v) for k, v in lin["weights"].items()},
            bias=float(lin.get("bias", 0.0)),
            threshold=float(lin.get("threshold", 0.8)),
            gap=float(lin.get("gap", 0.05)),
        )
    if "tree" in obj:
        return _tree_from_json(obj["tree"])
    raise ValueError("model must have a 'linear' or 'tree' key")


def model_to_json(model: DecisionModel) -> dict:
    if isinstance(model, LinearModel):
        return {"linear": {"weights": dict(model.weights), "bias": model.bias, "threshold": model.threshold, "gap": model.gap}}
    return {"tree": _tree_to_json(model)}


def load_model(path: str) -> DecisionModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
