"""Document embedding providers.

``lsa`` is a truncated SVD of smoothed TF-IDF, standing in for a sentence
transformer; ``file`` loads precomputed vectors keyed by document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import AlignmentError, ParameterError, ValidationError
from ..vectorize import Vocabulary, build_vocabulary, count_matrix, tfidf_transform

PROVIDERS = ("lsa", "file")


@dataclass(frozen=True)
class EmbeddingMatrix:
    vectors: np.ndarray
    provider: str
    keys: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise ValidationError("embedding must be a 2-D array")
        if v.shape[1] < 2:
            raise ValidationError(f"embedding dim must be >= 2, got {v.shape[1]}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("embedding contains NaN or Inf")
        if self.keys and len(self.keys) != v.shape[0]:
            raise ValidationError("keys must align with embedding rows")
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "keys", tuple(self.keys))

    @property
    def shape(self) -> tuple[int, int]:
        return self.vectors.shape

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def orient_rows(axes: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive."""
    axes = np.array(axes, dtype=np.float64)
    for row in axes:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return axes


def truncated_svd(X: np.ndarray, d: int, seed: int, n_iter: int = 7, oversample: int = 10):
    """Top-``d`` singular triplets by seeded randomized subspace iteration.

    Falls back to a full SVD when the sketch would cover the smaller side.
    Singular vectors are sign-normalized on the right factor.
    """
    n, m = X.shape
    width = d + oversample
    if width >= min(n, m):
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    else:
        rng = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(X @ rng.standard_normal((m, width)))
        for _ in range(n_iter):
            Z, _ = np.linalg.qr(X.T @ Q)
            Q, _ = np.linalg.qr(X @ Z)
        Ub, s, Vt = np.linalg.svd(Q.T @ X, full_matrices=False)
        U = Q @ Ub
    U, s, Vt = U[:, :d], s[:d], Vt[:d]
    for i in range(d):
        j = np.argmax(np.abs(Vt[i]))
        if Vt[i, j] < 0:
            Vt[i] *= -1.0
            U[:, i] *= -1.0
    return U, s, Vt


def embed_lsa(
    corpus,
    dims: int = 50,
    seed: int = 0,
    vocab: Vocabulary | None = None,
    stop_words=(),
) -> EmbeddingMatrix:
    """Project L2-normalized smoothed TF-IDF document vectors onto ``dims`` axes."""
    if vocab is None:
        vocab = build_vocabulary(corpus, stop_words=stop_words)
    A = tfidf_transform(count_matrix(corpus, vocab), "smooth").toarray()
    n_terms, n_docs = A.shape
    if not 2 <= dims <= min(n_terms, n_docs):
        raise ParameterError(
            f"lsa dims must be in [2, min(n_terms, n_docs) = {min(n_terms, n_docs)}], got {dims}"
        )
    X = A.T
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    X = X / np.where(norms > 0, norms, 1.0)
    U, s, _ = truncated_svd(X, dims, seed)
    return EmbeddingMatrix(U * s, "lsa", tuple(_keys(corpus)))


def _keys(corpus):
    return [d.key for d in corpus]


def load_embedding_file(path: Path, corpus) -> EmbeddingMatrix:
    """Read ``{"report_id", "page_no", "vector"}`` JSON lines in corpus order."""
    records: dict[tuple[str, int], list[float]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                key = (str(obj["report_id"]).upper(), int(obj["page_no"]))
                records[key] = [float(x) for x in obj["vector"]]
            except (ValueError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad embedding record: {exc}") from exc
    rows = []
    for key in _keys(corpus):
        if key not in records:
            raise AlignmentError(f"embedding file {path} has no vector for {key[0]} page {key[1]}")
        rows.append(records[key])
    if len({len(r) for r in rows}) != 1:
        raise ValidationError(f"{path}: vectors have inconsistent lengths")
    return EmbeddingMatrix(np.array(rows), "file", tuple(_keys(corpus)))


def embed(corpus, provider: str = "lsa", *, dims: int = 50, seed: int = 0,
          emb_file: Path | None = None, stop_words=()) -> EmbeddingMatrix:
    if provider == "lsa":
        return embed_lsa(corpus, dims=dims, seed=seed, stop_words=stop_words)
    if provider == "file":
        if emb_file is None:
            raise ParameterError("file provider needs emb_file")
        return load_embedding_file(emb_file, corpus)
    raise ParameterError(f"unknown embedding provider {provider!r}; expected one of {PROVIDERS}")
