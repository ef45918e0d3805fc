"""Class-based TF-IDF: score terms per cluster rather than per document."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyClassesError, ParameterError
from ..topics import OUTLIER_ID, Topic, TopicSet, top_terms
from ..vectorize import Vocabulary, count_matrix
from .hdbscan import NOISE, ClusterLabels


@dataclass(frozen=True)
class CTfidfWeights:
    """``weights[:, j]`` scores every term for class ``classes[j]``."""

    weights: np.ndarray
    classes: tuple[int, ...]
    class_tf: np.ndarray
    avg_words_per_class: float
    term_freq_total: np.ndarray

    def column(self, label: int) -> np.ndarray:
        return self.weights[:, self.classes.index(label)]


def ctfidf(corpus, vocab: Vocabulary, labels: ClusterLabels, include_noise: bool = False) -> CTfidfWeights:
    """``weight(t, c) = tf(t, c) * ln(1 + A / f(t))``.

    ``tf(t, c)`` counts ``t`` over the documents of class ``c``, ``A`` is
    the mean token count per class and ``f(t)`` the frequency of ``t`` over
    the whole corpus.
    """
    lab = labels.labels
    if len(lab) != len(corpus):
        raise ParameterError("labels do not align with the corpus")
    classes = list(range(labels.n_clusters))
    if include_noise and np.any(lab == NOISE):
        classes = [NOISE] + classes
    if not classes:
        raise EmptyClassesError("no clusters to represent")

    counts = count_matrix(corpus, vocab).matrix.tocsr()
    f = np.asarray(counts.sum(axis=1)).ravel()
    class_tf = np.column_stack([
        np.asarray(counts[:, np.flatnonzero(lab == c)].sum(axis=1)).ravel() for c in classes
    ])
    avg = float(class_tf.sum() / len(classes))
    with np.errstate(divide="ignore"):
        idf = np.where(f > 0, np.log1p(avg / np.where(f > 0, f, 1.0)), 0.0)
    return CTfidfWeights(class_tf * idf[:, None], tuple(classes), class_tf, avg, f)


def cluster_topic_set(
    weights: CTfidfWeights,
    vocab: Vocabulary,
    labels: ClusterLabels,
    n_words: int = 10,
    include_outlier: bool = False,
) -> TopicSet:
    """One topic per cluster, largest first; the -1 bucket only on request."""
    if n_words < 1:
        raise ParameterError("n_words must be >= 1")
    topics = []
    for label in weights.classes:
        if label == NOISE and not include_outlier:
            continue
        col = weights.column(label).copy()
        topics.append(Topic(
            id=int(label),
            technique="cluster",
            top_terms=top_terms(col, vocab.terms, n_words),
            size=float(np.sum(labels.labels == label)),
            weights=col,
            outlier=label == OUTLIER_ID,
        ))
    topics.sort(key=lambda t: (t.outlier, -t.size, t.id))
    return TopicSet("cluster", vocab.terms, vocab.doc_freq, vocab.n_docs, tuple(topics))
