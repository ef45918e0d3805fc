"""Frobenius NMF by multiplicative updates.

Factorizes a nonnegative term x document matrix ``A`` into ``W`` (terms x
k) and ``H`` (k x documents). The Lee-Seung updates never increase
``||A - WH||_F``, which the tests check step by step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import EmptyInputError, ParameterError, ValidationError
from .topics import Topic, TopicSet, top_terms
from .vectorize import DocTermMatrix, Vocabulary

EPS = 1e-12


@dataclass(frozen=True)
class NmfModel:
    W: np.ndarray
    H: np.ndarray
    k: int
    objective_trace: tuple[float, ...]
    seed: int

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _dense(A) -> np.ndarray:
    if isinstance(A, DocTermMatrix):
        A = A.matrix
    if sp.issparse(A):
        A = A.toarray()
    return np.asarray(A, dtype=np.float64)


def nmf_fit(
    A,
    k: int = 10,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-6,
    callback: Callable[[int, np.ndarray, np.ndarray, float], None] | None = None,
) -> NmfModel:
    """Fit ``A ~ W @ H``.

    Parameters
    ----------
    A : DocTermMatrix, sparse or dense array
        Nonnegative (n_terms, n_docs) matrix.
    k : int
        Number of topics, ``1 <= k <= min(A.shape)``.
    seed : int
        Seeds the uniform initialization; equal seeds give identical factors.
    max_iter : int
        Upper bound on update sweeps (one sweep updates H, then W).
    tol : float
        Stop once the relative drop in the objective falls below ``tol``.
    callback : callable, optional
        Called as ``callback(iteration, W, H, objective)`` after each sweep.

    Returns
    -------
    NmfModel
        ``objective_trace[i]`` is the Frobenius error after sweep ``i + 1``.
    """
    A = _dense(A)
    if A.size == 0:
        raise EmptyInputError("cannot factorize an empty matrix")
    if np.any(A < 0) or not np.all(np.isfinite(A)):
        raise ParameterError("A must be finite and nonnegative")
    n, m = A.shape
    if not 1 <= k <= min(n, m):
        raise ParameterError(f"k must be in [1, {min(n, m)}], got {k}")
    if max_iter < 1 or tol <= 0:
        raise ParameterError("max_iter must be >= 1 and tol > 0")

    rng = np.random.default_rng(seed)
    scale = np.sqrt(A.mean() / k)
    # 1 - U[0, 1) lies in (0, 1]; clamp to (EPS, 1].
    W = np.maximum(1.0 - rng.random((n, k)), EPS) * scale
    H = np.maximum(1.0 - rng.random((k, m)), EPS) * scale

    trace: list[float] = []
    prev = np.linalg.norm(A - W @ H)
    for it in range(max_iter):
        H *= (W.T @ A) / (W.T @ W @ H + EPS)
        W *= (A @ H.T) / (W @ (H @ H.T) + EPS)
        obj = float(np.linalg.norm(A - W @ H))
        trace.append(obj)
        if callback is not None:
            callback(it, W, H, obj)
        if prev == 0 or (prev - obj) / prev < tol:
            break
        prev = obj

    return NmfModel(W, H, k, tuple(trace), seed)


def nmf_topics(model: NmfModel, vocab: Vocabulary, n_words: int = 10) -> TopicSet:
    if n_words < 1:
        raise ParameterError("n_words must be >= 1")
    if model.W.shape[0] != len(vocab):
        raise ParameterError("model and vocabulary disagree on the number of terms")
    topics = []
    for i in range(model.k):
        col = model.W[:, i].copy()
        topics.append(Topic(
            id=i,
            technique="nmf",
            top_terms=top_terms(col, vocab.terms, n_words),
            size=float(model.H[i].sum()),
            weights=col,
        ))
    return TopicSet("nmf", vocab.terms, vocab.doc_freq, vocab.n_docs, tuple(topics))


def save_model(model: NmfModel, path: Path) -> None:
    obj = {
        "k": model.k,
        "seed": model.seed,
        "W_shape": list(model.W.shape),
        "H_shape": list(model.H.shape),
        "W": model.W.ravel(order="C").tolist(),
        "H": model.H.ravel(order="C").tolist(),
        "objective_trace": list(model.objective_trace),
    }
    Path(path).write_text(json.dumps(obj) + "\n", encoding="utf-8")


def load_model(path: Path) -> NmfModel:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        W = np.asarray(obj["W"], dtype=np.float64).reshape(obj["W_shape"])
        H = np.asarray(obj["H"], dtype=np.float64).reshape(obj["H_shape"])
        return NmfModel(W, H, int(obj["k"]), tuple(obj["objective_trace"]), int(obj["seed"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed NMF model: {exc}") from exc
