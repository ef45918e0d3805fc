"""themeforge: candidate vision-element themes from report corpora.

Two topic-modeling routes share one vectorizer: NMF over TF-IDF, and an
embed / reduce / HDBSCAN / c-TF-IDF cluster route. Generated topics are
exported as plot-ready JSON and scored against human correlation
annotations.
"""

__version__ = "0.1.0"
