"""Embed -> reduce -> HDBSCAN -> c-TF-IDF topic pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..topics import TopicSet
from ..vectorize import build_vocabulary
from .ctfidf import CTfidfWeights, cluster_topic_set, ctfidf
from .embed import EmbeddingMatrix, embed, embed_lsa, load_embedding_file
from .hdbscan import ClusterLabels, hdbscan
from .reduce import Reducer, pca_reduce, reduce

__all__ = [
    "ClusterConfig", "ClusterResult", "fit_cluster_topics",
    "EmbeddingMatrix", "ClusterLabels", "CTfidfWeights",
    "embed", "embed_lsa", "load_embedding_file", "reduce", "pca_reduce",
    "hdbscan", "ctfidf", "cluster_topic_set",
]


@dataclass(frozen=True)
class ClusterConfig:
    provider: str = "lsa"
    emb_file: Path | None = None
    dims: int = 50
    reduce_dims: int = 5
    min_cluster_size: int = 5
    min_samples: int | None = None
    seed: int = 0
    n_words: int = 10
    include_outlier: bool = False
    embed_stop_words: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ClusterResult:
    embeddings: EmbeddingMatrix
    reduced: EmbeddingMatrix
    labels: ClusterLabels
    weights: CTfidfWeights
    topics: TopicSet


def fit_cluster_topics(corpus, config: ClusterConfig = ClusterConfig(),
                       reducer: Reducer = pca_reduce) -> ClusterResult:
    """Run the whole cluster pipeline.

    c-TF-IDF uses an unfiltered vocabulary, so function words stay visible
    in the outlier bucket; ``embed_stop_words`` only shapes the LSA input.
    """
    emb = embed(corpus, config.provider, dims=config.dims, seed=config.seed,
                emb_file=config.emb_file, stop_words=config.embed_stop_words)
    reduced = reducer(emb, config.reduce_dims)
    labels = hdbscan(reduced, config.min_cluster_size, config.min_samples)
    vocab = build_vocabulary(corpus)
    weights = ctfidf(corpus, vocab, labels, include_noise=config.include_outlier)
    topics = cluster_topic_set(weights, vocab, labels, config.n_words, config.include_outlier)
    return ClusterResult(emb, reduced, labels, weights, topics)
