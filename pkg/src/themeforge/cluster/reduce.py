"""Dimensionality reduction ahead of clustering.

Any callable ``reducer(emb, out_dim) -> EmbeddingMatrix`` can replace
:func:`pca_reduce` in the pipeline.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import ParameterError
from .embed import EmbeddingMatrix, orient_rows

Reducer = Callable[[EmbeddingMatrix, int], EmbeddingMatrix]


def principal_axes(X: np.ndarray, out_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and top ``out_dim`` covariance eigenvectors (rows, sign-normalized)."""
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / max(len(X) - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1][:out_dim]
    return mean, orient_rows(evecs[:, order].T)


def pca_reduce(emb: EmbeddingMatrix, out_dim: int = 5) -> EmbeddingMatrix:
    if not 2 <= out_dim <= emb.dim:
        raise ParameterError(f"out_dim must be in [2, {emb.dim}], got {out_dim}")
    mean, axes = principal_axes(emb.vectors, out_dim)
    return EmbeddingMatrix((emb.vectors - mean) @ axes.T, emb.provider, emb.keys)


reduce = pca_reduce
