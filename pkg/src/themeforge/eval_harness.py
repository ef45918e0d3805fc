"""Score generated topics against a strategic plan's vision elements.

Correlation strengths come from human annotators and are only read from
file here. :func:`suggest_alignments` ranks candidate pairs to speed up
that review but never assigns a strength.

Strength rubric given to annotators (guidance, not enforced):

* strong: the element's central theme matches the topic's top three terms.
* medium: topic and element clearly share a theme.
* weak: partial or purely terminological overlap.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .topics import TECHNIQUES, TopicSet
from .vectorize import Vocabulary, count_tokens, idf_weights

STRENGTHS = ("weak", "medium", "strong")


@dataclass(frozen=True)
class VisionElement:
    id: str
    title: str
    text: str


@dataclass(frozen=True)
class CorrelationRecord:
    technique: str
    topic_id: int
    vision_element_id: str
    strength: str
    note: str | None = None

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.technique, self.topic_id, self.vision_element_id)


@dataclass(frozen=True)
class AnnotationSet:
    records: tuple[CorrelationRecord, ...]
    element_ids: tuple[str, ...]

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class MetricsReport:
    per_element_counts: dict[str, int]
    per_technique_counts: dict[str, int]
    strength_counts: dict[str, dict[str, int]]
    strength_distribution: dict[str, dict[str, float] | None]
    element_breakdown: dict[str, dict[str, dict[str, int]]]
    total: int

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "per_element_counts": self.per_element_counts,
            "per_technique_counts": self.per_technique_counts,
            "strength_counts": self.strength_counts,
            "strength_distribution": self.strength_distribution,
            "element_breakdown": self.element_breakdown,
        }


def load_truth(path: Path) -> list[VisionElement]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ValidationError(f"{path}: expected a JSON array of vision elements")
    if not data:
        raise ValidationError(f"{path}: truth file holds no vision elements")
    elements, seen = [], set()
    for i, item in enumerate(data):
        try:
            el = VisionElement(str(item["id"]), str(item["title"]), str(item["text"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{path}: element {i} lacks id/title/text") from exc
        if el.id in seen:
            raise ValidationError(f"{path}: duplicate vision element id {el.id!r}")
        if not el.text.strip():
            raise ValidationError(f"{path}: vision element {el.id!r} has empty text")
        seen.add(el.id)
        elements.append(el)
    return elements


def _parse_record(obj, truth_ids: set[str], where: str) -> CorrelationRecord:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected a JSON object")
    try:
        technique = obj["technique"]
        topic_id = obj["topic_id"]
        element = obj["vision_element_id"]
        strength = obj["strength"]
    except KeyError as exc:
        raise ValidationError(f"{where}: missing field {exc.args[0]!r}") from exc
    if technique not in TECHNIQUES:
        raise ValidationError(f"{where}: unknown technique {technique!r}")
    if isinstance(topic_id, bool) or not isinstance(topic_id, int):
        raise ValidationError(f"{where}: topic_id must be an integer")
    if strength not in STRENGTHS:
        raise ValidationError(f"{where}: unknown strength {strength!r}; expected one of {STRENGTHS}")
    if element not in truth_ids:
        raise ValidationError(f"{where}: unknown vision element {element!r}")
    return CorrelationRecord(technique, topic_id, element, strength, obj.get("note"))


def build_annotation_set(records: Iterable[CorrelationRecord], truth: Sequence[VisionElement]) -> AnnotationSet:
    ids = {e.id for e in truth}
    out, seen = [], set()
    for i, rec in enumerate(records, 1):
        rec = _parse_record(rec.__dict__ if isinstance(rec, CorrelationRecord) else rec, ids, f"record {i}")
        if rec.key in seen:
            raise ValidationError(f"record {i}: duplicate annotation {rec.key}")
        seen.add(rec.key)
        out.append(rec)
    return AnnotationSet(tuple(out), tuple(e.id for e in truth))


def load_annotations(path: Path, truth: Sequence[VisionElement]) -> AnnotationSet:
    ids = {e.id for e in truth}
    records, seen = [], set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{where}: malformed JSON: {exc}") from exc
            rec = _parse_record(obj, ids, where)
            if rec.key in seen:
                raise ValidationError(f"{where}: duplicate annotation {rec.key}")
            seen.add(rec.key)
            records.append(rec)
    return AnnotationSet(tuple(records), tuple(e.id for e in truth))


def metric_per_element(ann: AnnotationSet) -> dict[str, int]:
    counts = Counter(r.vision_element_id for r in ann.records)
    return {e: counts.get(e, 0) for e in ann.element_ids}


def metric_per_technique(ann: AnnotationSet) -> dict[str, int]:
    counts = Counter(r.technique for r in ann.records)
    return {t: counts.get(t, 0) for t in TECHNIQUES}


def _strength_counts(ann: AnnotationSet) -> dict[str, dict[str, int]]:
    counts = Counter((r.technique, r.strength) for r in ann.records)
    return {t: {s: counts.get((t, s), 0) for s in STRENGTHS} for t in TECHNIQUES}


def strength_distribution(ann: AnnotationSet) -> dict[str, dict[str, float] | None]:
    """Percent weak/medium/strong per technique, to 0.1; ``None`` when a technique has no records."""
    out: dict[str, dict[str, float] | None] = {}
    for technique, counts in _strength_counts(ann).items():
        total = sum(counts.values())
        out[technique] = None if total == 0 else {
            s: round(100.0 * c / total, 1) for s, c in counts.items()
        }
    return out


def compute_metrics(ann: AnnotationSet) -> MetricsReport:
    breakdown = {e: {t: {s: 0 for s in STRENGTHS} for t in TECHNIQUES} for e in ann.element_ids}
    for r in ann.records:
        breakdown[r.vision_element_id][r.technique][r.strength] += 1
    return MetricsReport(
        per_element_counts=metric_per_element(ann),
        per_technique_counts=metric_per_technique(ann),
        strength_counts=_strength_counts(ann),
        strength_distribution=strength_distribution(ann),
        element_breakdown=breakdown,
        total=len(ann.records),
    )


def _fmt_pct(v: float | None) -> str:
    return "undefined" if v is None else f"{v:.1f}"


def render_report(metrics: MetricsReport, fmt: str = "markdown") -> str:
    if fmt == "json":
        return json.dumps(metrics.to_json(), indent=2) + "\n"
    if fmt != "markdown":
        raise ValidationError(f"unknown report format {fmt!r}")

    lines = ["# Topic correlation report", "", f"total: {metrics.total}", ""]
    lines += ["## Correlated topics by vision element", "",
              "| vision element | correlated topics |", "|---|---|"]
    lines += [f"| {e} | {c} |" for e, c in metrics.per_element_counts.items()]
    lines += [f"| total: {metrics.total} | {metrics.total} |", ""]

    lines += ["## Correlated topics by technique", "",
              "| technique | " + " | ".join(STRENGTHS) + " | correlated topics |",
              "|---|" + "---|" * (len(STRENGTHS) + 1)]
    for t, c in metrics.per_technique_counts.items():
        sc = metrics.strength_counts[t]
        lines.append(f"| {t} | " + " | ".join(str(sc[s]) for s in STRENGTHS) + f" | {c} |")
    lines += [f"| total: {metrics.total} | " + " | ".join(
        str(sum(metrics.strength_counts[t][s] for t in TECHNIQUES)) for s in STRENGTHS
    ) + f" | {metrics.total} |", ""]

    lines += ["## Correlation strength by vision element", "",
              "| vision element | technique | " + " | ".join(STRENGTHS) + " |",
              "|---|---|" + "---|" * len(STRENGTHS)]
    for e, per_t in metrics.element_breakdown.items():
        for t, sc in per_t.items():
            lines.append(f"| {e} | {t} | " + " | ".join(str(sc[s]) for s in STRENGTHS) + " |")
    lines.append("")

    lines += ["## Strength distribution (%)", "",
              "| technique | " + " | ".join(f"{s} %" for s in STRENGTHS) + " |",
              "|---|" + "---|" * len(STRENGTHS)]
    for t, dist in metrics.strength_distribution.items():
        cells = [_fmt_pct(None if dist is None else dist[s]) for s in STRENGTHS]
        lines.append(f"| {t} | " + " | ".join(cells) + " |")
    lines.append("")
    return "\n".join(lines)


def _element_vector(text: str, terms: Sequence[str], doc_freq, n_docs: int) -> np.ndarray:
    vocab = Vocabulary(tuple(terms), np.asarray(doc_freq), n_docs)
    counts = count_tokens([text], vocab).toarray()[:, 0]
    return counts * idf_weights(doc_freq, n_docs, "smooth")


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), 0.0, 1.0))


@dataclass(frozen=True)
class Alignment:
    vision_element_id: str
    technique: str
    topic_id: int
    score: float
    top_terms: tuple[str, ...] = field(default=())


def suggest_alignments(
    topic_sets: TopicSet | Sequence[TopicSet],
    elements: Sequence[VisionElement],
    top_n: int = 5,
) -> dict[str, list[Alignment]]:
    """Rank topics per vision element by cosine of term weights vs. element TF-IDF.

    Element text is weighted with each topic set's own corpus document
    frequencies, so scores from NMF and cluster topics are comparable in
    form but not calibrated against one another.
    """
    if isinstance(topic_sets, TopicSet):
        topic_sets = [topic_sets]
    out: dict[str, list[Alignment]] = {}
    for el in elements:
        cands = []
        for ts in topic_sets:
            vec = _element_vector(el.text, ts.terms, ts.doc_freq, ts.n_docs)
            for t in ts.regular():
                cands.append(Alignment(
                    el.id, t.technique, t.id, _cosine(t.weights, vec),
                    tuple(term for term, _ in t.top_terms[:5]),
                ))
        cands.sort(key=lambda a: (-a.score, TECHNIQUES.index(a.technique), a.topic_id))
        out[el.id] = cands[:top_n]
    return out


def alignments_to_json(suggestions: dict[str, list[Alignment]]) -> dict:
    return {
        e: [
            {"technique": a.technique, "topic_id": a.topic_id, "score": a.score,
             "top_terms": list(a.top_terms)}
            for a in cands
        ]
        for e, cands in suggestions.items()
    }
