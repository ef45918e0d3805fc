"""Intertopic distance map and top-word bar data.

Nothing here draws; the exports are JSON meant for any plotting tool.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cluster.embed import orient_rows
from .errors import InsufficientTopicsError, ParameterError, ThemeforgeError
from .topics import Topic, TopicSet

MAP_TOP_WORDS = 5


@dataclass(frozen=True)
class TopicDistanceMatrix:
    topic_ids: tuple[int, ...]
    distances: np.ndarray
    metric: str = "cosine"

    @property
    def n_topics(self) -> int:
        return len(self.topic_ids)


@dataclass(frozen=True)
class MdsResult:
    coords: np.ndarray
    eigenvalues: np.ndarray
    clamped: bool

    def points(self) -> list[tuple[float, float]]:
        return [(float(x), float(y)) for x, y in self.coords]


def _regular(topics) -> list[Topic]:
    if isinstance(topics, TopicSet):
        return topics.regular()
    return [t for t in topics if not t.outlier]


def topic_distance_matrix(topics) -> TopicDistanceMatrix:
    """Pairwise ``1 - cos`` between full term-weight vectors (outliers dropped).

    A zero vector sits at distance 1 from every other topic.
    """
    regular = _regular(topics)
    if len(regular) < 2:
        raise InsufficientTopicsError(f"need >= 2 topics for a distance map, got {len(regular)}")
    V = np.vstack([t.weights for t in regular]).astype(np.float64)
    norms = np.linalg.norm(V, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    U = V / safe[:, None]
    cos = np.clip(U @ U.T, -1.0, 1.0)
    D = 1.0 - cos
    zero = norms == 0
    D[zero, :] = 1.0
    D[:, zero] = 1.0
    D = (D + D.T) / 2.0
    np.fill_diagonal(D, 0.0)
    return TopicDistanceMatrix(tuple(t.id for t in regular), D)


def mds_2d(D) -> MdsResult:
    """Classical (Torgerson) scaling to the plane.

    Double-centres the squared distances and keeps the two largest
    eigenpairs, clamping negative eigenvalues to zero. ``clamped`` is set
    whenever B has a negative eigenvalue, i.e. D is not Euclidean.
    """
    D = np.asarray(D.distances if isinstance(D, TopicDistanceMatrix) else D, dtype=np.float64)
    n = D.shape[0]
    if n < 2 or D.shape != (n, n):
        raise ParameterError("mds_2d needs a square matrix over >= 2 topics")
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D ** 2) @ J
    B = (B + B.T) / 2.0
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals, kind="stable")[::-1]
    top = evals[order[:2]]
    vecs = evecs[:, order[:2]]
    if n == 2:
        top = np.array([top[0], 0.0])
    vecs = orient_rows(vecs.T).T
    tol = 1e-12 * max(float(np.abs(evals).max()), 1.0)
    clamped = bool(np.any(evals < -tol))
    coords = vecs * np.sqrt(np.maximum(top, 0.0))
    coords -= coords.mean(axis=0)
    return MdsResult(coords, evals[order], clamped)


def _write_json(obj, path: Path) -> None:
    try:
        Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ThemeforgeError(f"cannot write {path}: {exc}") from exc


def export_distance_map(
    topics: Sequence[Topic],
    coords,
    sizes: Sequence[float] | None,
    path: Path,
) -> list[dict]:
    """Write one ``{topic_id, x, y, size, top_words}`` object per regular topic."""
    topics = list(topics)
    coords = np.asarray(coords.coords if isinstance(coords, MdsResult) else coords)
    if sizes is None:
        sizes = [t.size for t in topics]
    if not len(topics) == len(coords) == len(sizes):
        raise ParameterError("topics, coords and sizes must have equal length")
    points = [
        {
            "topic_id": int(t.id),
            "x": float(xy[0]),
            "y": float(xy[1]),
            "size": float(s),
            "top_words": [term for term, _ in t.top_terms[:MAP_TOP_WORDS]],
        }
        for t, xy, s in zip(topics, coords, sizes)
        if not t.outlier
    ]
    _write_json(points, path)
    return points


def distance_map(topic_set: TopicSet, path: Path) -> list[dict]:
    """Distances, MDS and export in one call."""
    D = topic_distance_matrix(topic_set)
    result = mds_2d(D)
    return export_distance_map(topic_set.regular(), result, None, path)


def export_topic_bars(topics, n_words: int, path: Path) -> list[dict]:
    if n_words < 1:
        raise ParameterError("n_words must be >= 1")
    technique = topics.technique if isinstance(topics, TopicSet) else None
    bars = [
        {
            "topic_id": int(t.id),
            "technique": technique or t.technique,
            "outlier": bool(t.outlier),
            "bars": [{"term": term, "weight": float(w)} for term, w in t.top_terms[:n_words]],
        }
        for t in topics
    ]
    _write_json(bars, path)
    return bars
