"""Tokenizer, vocabulary and sparse term-by-document matrices.

Matrices are oriented term x document (rows are vocabulary entries,
columns are corpus documents), matching ``A ~ W @ H`` with ``W`` the
term-topic factor.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyVocabularyError, ParameterError, ValidationError

_TOKEN_RE = re.compile(r"[^\W_]{2,}")

IDF_MODES = ("smooth", "plain")


def tokenize(text: str) -> list[str]:
    """Lower-cased runs of letters/digits, at least two characters long."""
    return _TOKEN_RE.findall(text.lower())


def default_stop_words() -> frozenset[str]:
    raw = resources.files("themeforge").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(w for w in raw.split() if w)


def load_stop_words(path: Path | None) -> frozenset[str]:
    """Read a whitespace-separated stop list; ``None`` gives the bundled English list."""
    if path is None:
        return default_stop_words()
    return frozenset(w.lower() for w in Path(path).read_text(encoding="utf-8").split())


def _texts(corpus) -> list[str]:
    return [doc if isinstance(doc, str) else doc.text for doc in corpus]


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    doc_freq: np.ndarray
    n_docs: int
    term_to_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "doc_freq", np.asarray(self.doc_freq, dtype=np.int64))
        object.__setattr__(self, "term_to_index", {t: i for i, t in enumerate(self.terms)})
        if len(self.term_to_index) != len(self.terms):
            raise ValidationError("vocabulary terms must be unique")
        if self.doc_freq.shape != (len(self.terms),):
            raise ValidationError("doc_freq length must match terms")

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.term_to_index


def build_vocabulary(
    corpus,
    min_df: int = 1,
    max_df_ratio: float = 1.0,
    stop_words: Iterable[str] = (),
) -> Vocabulary:
    if min_df < 1:
        raise ParameterError(f"min_df must be >= 1, got {min_df}")
    if not 0 < max_df_ratio <= 1:
        raise ParameterError(f"max_df_ratio must be in (0, 1], got {max_df_ratio}")
    texts = _texts(corpus)
    n_docs = len(texts)
    stops = frozenset(stop_words)
    df: Counter = Counter()
    for text in texts:
        df.update(set(tokenize(text)))
    kept = sorted(
        t for t, c in df.items()
        if c >= min_df and c / n_docs <= max_df_ratio and t not in stops
    )
    if not kept:
        raise EmptyVocabularyError("no terms survive vocabulary filtering")
    return Vocabulary(tuple(kept), np.array([df[t] for t in kept]), n_docs)


@dataclass(frozen=True)
class DocTermMatrix:
    """Sparse term x document matrix; ``kind`` is ``"counts"`` or ``"tfidf"``."""

    matrix: sp.csc_matrix
    kind: str

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def count_tokens(texts: Sequence[str], vocab: Vocabulary) -> sp.csc_matrix:
    rows, cols, vals = [], [], []
    index = vocab.term_to_index
    for j, text in enumerate(texts):
        counts = Counter(t for t in tokenize(text) if t in index)
        for term, c in counts.items():
            rows.append(index[term])
            cols.append(j)
            vals.append(c)
    m = sp.csc_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(len(vocab), len(texts))
    )
    m.sort_indices()
    return m


def count_matrix(corpus, vocab: Vocabulary) -> DocTermMatrix:
    return DocTermMatrix(count_tokens(_texts(corpus), vocab), "counts")


def idf_weights(doc_freq, n_docs: int, smoothing: str = "smooth") -> np.ndarray:
    df = np.asarray(doc_freq, dtype=np.float64)
    if smoothing == "smooth":
        return np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    if smoothing == "plain":
        if np.any(df < 1):
            raise ParameterError("plain idf needs doc_freq >= 1 for every term")
        return np.log(n_docs / df)
    raise ParameterError(f"unknown idf mode {smoothing!r}; expected one of {IDF_MODES}")


def tfidf_transform(
    counts: DocTermMatrix,
    smoothing: str = "smooth",
    doc_freq=None,
    n_docs: int | None = None,
) -> DocTermMatrix:
    """Scale each row of a count matrix by its inverse document frequency.

    ``doc_freq``/``n_docs`` default to the statistics of ``counts`` itself;
    pass a corpus vocabulary's values to weight new texts consistently.
    """
    if counts.kind != "counts":
        raise ParameterError("tfidf_transform expects a counts matrix")
    m = counts.matrix
    if doc_freq is None:
        doc_freq = np.diff(m.tocsr().indptr)
    if n_docs is None:
        n_docs = m.shape[1]
    idf = idf_weights(doc_freq, n_docs, smoothing)
    weighted = sp.csc_matrix(sp.diags(idf) @ m)
    weighted.sort_indices()
    return DocTermMatrix(weighted, "tfidf")


def write_coo(dtm: DocTermMatrix, path: Path) -> None:
    """Debug export: ``n_terms n_docs nnz`` header, then ``term doc value`` lines."""
    coo = dtm.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    n_terms, n_docs = dtm.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{n_terms} {n_docs} {coo.nnz}\n")
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}\n")


def read_coo(path: Path, kind: str = "tfidf") -> DocTermMatrix:
    with open(path, encoding="utf-8") as fh:
        try:
            n_terms, n_docs, nnz = (int(x) for x in fh.readline().split())
            rows = np.loadtxt(fh, ndmin=2) if nnz else np.empty((0, 3))
        except ValueError as exc:
            raise ValidationError(f"{path}: malformed coordinate file: {exc}") from exc
    if rows.shape[0] != nnz:
        raise ValidationError(f"{path}: header says {nnz} entries, found {rows.shape[0]}")
    m = sp.csc_matrix(
        (rows[:, 2], (rows[:, 0].astype(np.int64), rows[:, 1].astype(np.int64))),
        shape=(n_terms, n_docs),
    )
    m.sort_indices()
    return DocTermMatrix(m, kind)


def save_vocabulary(vocab: Vocabulary, path: Path) -> None:
    obj = {"n_docs": vocab.n_docs, "terms": list(vocab.terms),
           "doc_freq": [int(x) for x in vocab.doc_freq]}
    Path(path).write_text(json.dumps(obj) + "\n", encoding="utf-8")


def load_vocabulary(path: Path) -> Vocabulary:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return Vocabulary(tuple(obj["terms"]), np.asarray(obj["doc_freq"]), int(obj["n_docs"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed vocabulary: {exc}") from exc
