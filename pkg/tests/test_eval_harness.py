from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from themeforge.errors import ValidationError
from themeforge.eval_harness import (
    STRENGTHS,
    CorrelationRecord,
    VisionElement,
    build_annotation_set,
    compute_metrics,
    load_annotations,
    load_truth,
    metric_per_element,
    metric_per_technique,
    render_report,
    strength_distribution,
    suggest_alignments,
)
from themeforge.topics import Topic, TopicSet
from themeforge.vectorize import tokenize

ELEMENTS = [VisionElement(f"VE{i}", f"title {i}", "placeholder text") for i in range(1, 4)]


def rec(technique, topic_id, element, strength):
    return {"technique": technique, "topic_id": topic_id, "vision_element_id": element, "strength": strength}


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


@pytest.fixture
def replica(replica_dir):
    truth = load_truth(replica_dir / "truth.json")
    return truth, load_annotations(replica_dir / "annotations.jsonl", truth)


class TestTruth:
    def test_six_elements(self, replica_dir):
        truth = load_truth(replica_dir / "truth.json")
        assert len(truth) == 6 and [e.id for e in truth] == [f"VE{i}" for i in range(1, 7)]

    @pytest.mark.parametrize("body", [
        "[]",
        '[{"id": "a", "title": "t", "text": "x"}, {"id": "a", "title": "u", "text": "y"}]',
        '[{"id": "a", "title": "t", "text": "  "}]',
        '[{"id": "a"}]',
        "{not json",
        '{"id": "a"}',
    ])
    def test_rejects(self, tmp_path, body):
        (tmp_path / "t.json").write_text(body)
        with pytest.raises(ValidationError):
            load_truth(tmp_path / "t.json")


class TestAnnotations:
    def test_replica_loads(self, replica):
        assert len(replica[1]) == 42

    @pytest.mark.parametrize("row, fragment", [
        (rec("nmf", 0, "VE1", "severe"), "strength"),
        (rec("nmf", 0, "VE9", "weak"), "VE9"),
        (rec("lda", 0, "VE1", "weak"), "technique"),
        ({"technique": "nmf", "topic_id": 0, "strength": "weak"}, "vision_element_id"),
        (rec("nmf", "0", "VE1", "weak"), "topic_id"),
    ])
    def test_bad_record_names_line(self, tmp_path, row, fragment):
        write_jsonl(tmp_path / "a.jsonl", [rec("cluster", 1, "VE1", "weak"), row])
        with pytest.raises(ValidationError, match=r"a\.jsonl:2") as info:
            load_annotations(tmp_path / "a.jsonl", ELEMENTS)
        assert fragment in str(info.value)

    def test_duplicate_triple(self, tmp_path):
        write_jsonl(tmp_path / "a.jsonl", [rec("nmf", 1, "VE1", "weak"), rec("nmf", 1, "VE1", "strong")])
        with pytest.raises(ValidationError, match="a.jsonl:2"):
            load_annotations(tmp_path / "a.jsonl", ELEMENTS)

    def test_malformed_line(self, tmp_path):
        (tmp_path / "a.jsonl").write_text(json.dumps(rec("nmf", 1, "VE1", "weak")) + "\n{oops\n")
        with pytest.raises(ValidationError, match="a.jsonl:2"):
            load_annotations(tmp_path / "a.jsonl", ELEMENTS)

    def test_blank_lines_and_notes(self, tmp_path):
        row = dict(rec("cluster", 3, "VE2", "medium"), note="shared land theme")
        (tmp_path / "a.jsonl").write_text("\n" + json.dumps(row) + "\n\n")
        ann = load_annotations(tmp_path / "a.jsonl", ELEMENTS)
        assert ann.records == (CorrelationRecord("cluster", 3, "VE2", "medium", "shared land theme"),)


class TestMetrics:
    def test_replica_numbers(self, replica):
        m = compute_metrics(replica[1])
        assert m.total == 42
        assert m.per_technique_counts == {"nmf": 9, "cluster": 33}
        assert min(m.per_element_counts.values()) == 6 and max(m.per_element_counts.values()) == 8
        assert m.strength_counts["cluster"] == {"weak": 15, "medium": 10, "strong": 8}
        assert m.strength_counts["nmf"] == {"weak": 6, "medium": 3, "strong": 0}
        assert m.strength_distribution["cluster"] == {"weak": 45.5, "medium": 30.3, "strong": 24.2}
        assert m.strength_distribution["nmf"] == {"weak": 66.7, "medium": 33.3, "strong": 0.0}

    def test_empty(self):
        ann = build_annotation_set([], ELEMENTS)
        assert metric_per_element(ann) == {"VE1": 0, "VE2": 0, "VE3": 0}
        assert metric_per_technique(ann) == {"nmf": 0, "cluster": 0}
        assert strength_distribution(ann) == {"nmf": None, "cluster": None}
        md = render_report(compute_metrics(ann))
        assert "total: 0" in md and "undefined" in md

    def test_single_record(self):
        ann = build_annotation_set([rec("nmf", 0, "VE2", "strong")], ELEMENTS)
        assert metric_per_element(ann) == {"VE1": 0, "VE2": 1, "VE3": 0}
        assert strength_distribution(ann)["nmf"] == {"weak": 0.0, "medium": 0.0, "strong": 100.0}
        assert strength_distribution(ann)["cluster"] is None

    def test_all_nmf(self):
        ann = build_annotation_set([rec("nmf", i, "VE1", "weak") for i in range(5)], ELEMENTS)
        assert metric_per_technique(ann) == {"nmf": 5, "cluster": 0}

    def test_build_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            build_annotation_set([rec("nmf", 0, "VE1", "weak")] * 2, ELEMENTS)


records_strategy = st.lists(
    st.tuples(st.sampled_from(["nmf", "cluster"]), st.integers(0, 30),
              st.sampled_from(["VE1", "VE2", "VE3"]), st.sampled_from(STRENGTHS)),
    max_size=60, unique_by=lambda r: r[:3],
)


@given(records_strategy, st.randoms(use_true_random=False))
def test_conservation_rounding_and_order_invariance(rows, rnd):
    ann = build_annotation_set([rec(*r) for r in rows], ELEMENTS)
    m = compute_metrics(ann)
    assert m.total == sum(m.per_element_counts.values()) == sum(m.per_technique_counts.values())
    for dist in m.strength_distribution.values():
        if dist is not None:
            assert abs(sum(dist.values()) - 100.0) <= 0.1 + 1e-9
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert compute_metrics(build_annotation_set([rec(*r) for r in shuffled], ELEMENTS)).to_json() == m.to_json()


class TestRender:
    def test_total_row(self, replica):
        md = render_report(compute_metrics(replica[1]), "markdown")
        assert "| total: 42 |" in md
        assert "| cluster | 15 | 10 | 8 | 33 |" in md
        assert "| nmf | 66.7 | 33.3 | 0.0 |" in md

    def test_formats_agree(self, replica):
        m = compute_metrics(replica[1])
        doc = json.loads(render_report(m, "json"))
        md = render_report(m, "markdown")
        assert doc["total"] == 42
        for e, c in doc["per_element_counts"].items():
            assert f"| {e} | {c} |" in md
        for t, dist in doc["strength_distribution"].items():
            assert f"| {t} | " + " | ".join(f"{dist[s]:.1f}" for s in STRENGTHS) + " |" in md
        for e, per_t in doc["element_breakdown"].items():
            for t, sc in per_t.items():
                assert f"| {e} | {t} | " + " | ".join(str(sc[s]) for s in STRENGTHS) + " |" in md
        for t, c in doc["per_technique_counts"].items():
            sc = doc["strength_counts"][t]
            assert f"| {t} | " + " | ".join(str(sc[s]) for s in STRENGTHS) + f" | {c} |" in md
        column_totals = [sum(doc["strength_counts"][t][s] for t in doc["strength_counts"]) for s in STRENGTHS]
        assert f"| total: 42 | " + " | ".join(map(str, column_totals)) + " | 42 |" in md

    def test_deterministic(self, replica):
        m = compute_metrics(replica[1])
        assert render_report(m, "markdown") == render_report(m, "markdown")
        assert render_report(m, "json") == render_report(m, "json")

    def test_unknown_format(self, replica):
        with pytest.raises(ValidationError):
            render_report(compute_metrics(replica[1]), "html")


class TestSuggest:
    TERMS = ("cleanup", "energy", "land", "records", "solar", "waste")

    def _set(self):
        def t(i, w):
            w = np.asarray(w, dtype=float)
            top = tuple((self.TERMS[j], float(w[j])) for j in np.argsort(-w, kind="stable") if w[j] > 0)
            return Topic(i, "cluster", top, 3.0, w)
        topics = (t(0, [2, 0, 0, 0, 0, 3]), t(1, [0, 2, 1, 0, 2, 0]), t(2, [0, 0, 0, 4, 0, 0]),
                  t(-1, [1, 1, 1, 1, 1, 1]))
        return TopicSet("cluster", self.TERMS, np.array([2, 3, 2, 1, 3, 2]), 5, topics)

    def _brute(self, ts, text):
        toks = tokenize(text)
        n = ts.n_docs
        vec = [toks.count(term) * (math.log((1 + n) / (1 + df)) + 1) for term, df in zip(ts.terms, ts.doc_freq)]
        out = {}
        for topic in ts.regular():
            w = list(topic.weights)
            dot = sum(a * b for a, b in zip(w, vec))
            na, nb = math.sqrt(sum(a * a for a in w)), math.sqrt(sum(b * b for b in vec))
            out[topic.id] = 0.0 if na == 0 or nb == 0 else dot / (na * nb)
        return out

    def test_matches_brute_force_cosine(self):
        ts = self._set()
        els = [VisionElement("A", "a", "waste cleanup of solar land"), VisionElement("B", "b", "records records")]
        got = suggest_alignments(ts, els, top_n=10)
        for el in els:
            ref = self._brute(ts, el.text)
            assert len(got[el.id]) == 3
            for a in got[el.id]:
                assert a.score == pytest.approx(ref[a.topic_id], abs=1e-12)
                assert 0.0 <= a.score <= 1.0
            scores = [a.score for a in got[el.id]]
            assert scores == sorted(scores, reverse=True)

    def test_identical_text_ranks_first(self):
        got = suggest_alignments(self._set(), [VisionElement("R", "r", "records")], top_n=1)
        assert got["R"][0].topic_id == 2 and got["R"][0].score == pytest.approx(1.0)

    def test_no_shared_vocabulary(self):
        got = suggest_alignments(self._set(), [VisionElement("Z", "z", "pension benefits")], top_n=5)
        assert [a.score for a in got["Z"]] == [0.0, 0.0, 0.0]

    def test_outlier_never_suggested(self):
        got = suggest_alignments(self._set(), [VisionElement("A", "a", "waste energy land")], top_n=10)
        assert all(a.topic_id != -1 for a in got["A"])

    def test_multiple_sets(self):
        ts = self._set()
        nmf = TopicSet("nmf", ts.terms, ts.doc_freq, ts.n_docs,
                       (Topic(0, "nmf", (("waste", 1.0),), 1.0, np.array([0, 0, 0, 0, 0, 1.0])),))
        got = suggest_alignments([nmf, ts], [VisionElement("W", "w", "waste")], top_n=2)
        assert [(a.technique, a.topic_id) for a in got["W"]] == [("nmf", 0), ("cluster", 0)]
