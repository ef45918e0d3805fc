"""Topic containers shared by the NMF and cluster pipelines.

A topic keeps its full term-weight vector over the set's vocabulary, so
intertopic distances and alignment scores never depend on the top-word
truncation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

TECHNIQUES = ("nmf", "cluster")
OUTLIER_ID = -1


def top_terms(weights: np.ndarray, terms, n_words: int) -> tuple[tuple[str, float], ...]:
    """Highest positive weights, descending, ties broken by term."""
    order = sorted(
        (i for i in np.flatnonzero(weights > 0)),
        key=lambda i: (-weights[i], terms[i]),
    )
    return tuple((terms[i], float(weights[i])) for i in order[:n_words])


@dataclass(frozen=True)
class Topic:
    id: int
    technique: str
    top_terms: tuple[tuple[str, float], ...]
    size: float
    weights: np.ndarray
    outlier: bool = False

    def __post_init__(self):
        if self.technique not in TECHNIQUES:
            raise ValidationError(f"unknown technique {self.technique!r}")
        if self.technique == "nmf" and self.id < 0:
            raise ValidationError("nmf topic ids must be >= 0")
        if self.id == OUTLIER_ID and not self.outlier:
            object.__setattr__(self, "outlier", True)


@dataclass(frozen=True)
class TopicSet:
    technique: str
    terms: tuple[str, ...]
    doc_freq: np.ndarray
    n_docs: int
    topics: tuple[Topic, ...]

    def __iter__(self):
        return iter(self.topics)

    def __len__(self):
        return len(self.topics)

    def regular(self) -> list[Topic]:
        """Topics other than the outlier bucket."""
        return [t for t in self.topics if not t.outlier]

    def get(self, topic_id: int) -> Topic:
        for t in self.topics:
            if t.id == topic_id:
                return t
        raise KeyError(topic_id)

    def to_json(self) -> dict:
        return {
            "technique": self.technique,
            "n_docs": int(self.n_docs),
            "terms": list(self.terms),
            "doc_freq": [int(x) for x in self.doc_freq],
            "topics": [
                {
                    "id": int(t.id),
                    "outlier": bool(t.outlier),
                    "size": float(t.size),
                    "top_terms": [[term, w] for term, w in t.top_terms],
                    "weights": [[int(i), float(t.weights[i])] for i in np.flatnonzero(t.weights)],
                }
                for t in self.topics
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TopicSet":
        try:
            technique = obj["technique"]
            terms = tuple(obj["terms"])
            topics = []
            for t in obj["topics"]:
                weights = np.zeros(len(terms))
                for i, w in t["weights"]:
                    weights[int(i)] = float(w)
                topics.append(Topic(
                    id=int(t["id"]),
                    technique=technique,
                    top_terms=tuple((str(a), float(b)) for a, b in t["top_terms"]),
                    size=float(t["size"]),
                    weights=weights,
                    outlier=bool(t.get("outlier", False)),
                ))
            return cls(technique, terms, np.asarray(obj["doc_freq"], dtype=np.int64),
                       int(obj["n_docs"]), tuple(topics))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ValidationError(f"malformed topic set: {exc}") from exc


def save_topic_set(topic_set: TopicSet, path: Path) -> None:
    Path(path).write_text(json.dumps(topic_set.to_json(), indent=1) + "\n", encoding="utf-8")


def load_topic_set(path: Path) -> TopicSet:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return TopicSet.from_json(obj)
