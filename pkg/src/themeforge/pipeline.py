"""End-to-end run: ingest, vectorize, both topic models, exports, evaluation.

Stages communicate only through files in the output directory; each stage
reads the artifacts registered by earlier stages. ``manifest.json`` records
every artifact with its SHA-256 and carries no timestamps, so two runs of
one config produce identical manifests.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from .cluster import ClusterConfig, fit_cluster_topics
from .config import PipelineConfig
from .corpus_ingest import ingest, load_corpus, write_source_manifest
from .errors import ThemeforgeError
from .eval_harness import (
    alignments_to_json,
    compute_metrics,
    load_annotations,
    load_truth,
    render_report,
    suggest_alignments,
)
from .nmf import nmf_fit, nmf_topics, save_model
from .topic_viz import distance_map, export_topic_bars
from .topics import load_topic_set, save_topic_set
from .vectorize import (
    build_vocabulary,
    count_matrix,
    load_stop_words,
    load_vocabulary,
    read_coo,
    save_vocabulary,
    tfidf_transform,
    write_coo,
)

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    def __init__(self, out_dir: Path):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.stages: list[dict] = []
        self.artifacts: dict[str, dict] = {}

    def path(self, name: str) -> Path:
        """Path of an artifact registered by an earlier stage."""
        if name not in self.artifacts:
            raise ThemeforgeError(f"artifact {name} was not produced by a prior stage")
        return self.out / name

    def register(self, stage: str, *names: str) -> None:
        for name in names:
            p = self.out / name
            self.artifacts[name] = {"stage": stage, "sha256": sha256(p), "bytes": p.stat().st_size}
        self.stages.append({"name": stage, "artifacts": list(names)})

    def write_manifest(self, status: str, error: str | None = None) -> Path:
        obj = {
            "status": status,
            "error": error,
            "stages_completed": [s["name"] for s in self.stages],
            "stages": self.stages,
            "artifacts": dict(sorted(self.artifacts.items())),
        }
        p = self.out / MANIFEST
        p.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
        return p


def _stage_ingest(run: Run, cfg: PipelineConfig):
    c = cfg.corpus
    corpus = ingest(c["input_dir"], run.out / "corpus.jsonl", pattern=c["pattern"])
    write_source_manifest(corpus.source_manifest, run.out / "corpus.sources.json")
    log.info("ingested %d pages", len(corpus))
    run.register("ingest", "corpus.jsonl", "corpus.sources.json")


def _stage_vectorize(run: Run, cfg: PipelineConfig):
    v = cfg.vectorizer
    corpus = load_corpus(run.path("corpus.jsonl"))
    vocab = build_vocabulary(corpus, v["min_df"], v["max_df_ratio"], load_stop_words(v["stop_words"]))
    tfidf = tfidf_transform(count_matrix(corpus, vocab), v["idf_mode"])
    save_vocabulary(vocab, run.out / "vocab_nmf.json")
    write_coo(tfidf, run.out / "tfidf_nmf.coo.txt")
    log.info("vocabulary of %d terms over %d documents", len(vocab), vocab.n_docs)
    run.register("vectorize", "vocab_nmf.json", "tfidf_nmf.coo.txt")


def _stage_nmf(run: Run, cfg: PipelineConfig):
    n = cfg.nmf
    vocab = load_vocabulary(run.path("vocab_nmf.json"))
    A = read_coo(run.path("tfidf_nmf.coo.txt"))
    model = nmf_fit(A, k=n["k"], seed=n["seed"], max_iter=n["max_iter"], tol=n["tol"])
    log.info("nmf k=%d: %d sweeps, error %.6g", model.k, len(model.objective_trace), model.objective)
    save_model(model, run.out / "model_nmf.json")
    save_topic_set(nmf_topics(model, vocab, n["n_words"]), run.out / "topics_nmf.json")
    run.register("train-nmf", "model_nmf.json", "topics_nmf.json")


def _stage_cluster(run: Run, cfg: PipelineConfig):
    c = cfg.cluster
    corpus = load_corpus(run.path("corpus.jsonl"))
    stops = load_stop_words(cfg.vectorizer["stop_words"]) if c["embed_stop_words"] else frozenset()
    result = fit_cluster_topics(corpus, ClusterConfig(
        provider=c["provider"], emb_file=c["emb_file"], dims=c["dims"],
        reduce_dims=c["reduce_dims"], min_cluster_size=c["min_cluster_size"],
        min_samples=c["min_samples"], seed=c["seed"], n_words=c["n_words"],
        include_outlier=c["include_outlier"], embed_stop_words=stops,
    ))
    labels = [
        {"report_id": rid, "page_no": page, "label": int(lab)}
        for (rid, page), lab in zip(corpus.keys, result.labels.labels)
    ]
    (run.out / "labels_cluster.json").write_text(json.dumps(labels, indent=1) + "\n", encoding="utf-8")
    save_topic_set(result.topics, run.out / "topics_cluster.json")
    log.info("cluster pipeline: %d clusters, %d noise pages", result.labels.n_clusters,
             int(np.sum(result.labels.labels < 0)))
    run.register("train-cluster", "labels_cluster.json", "topics_cluster.json")


def _stage_viz(run: Run, cfg: PipelineConfig):
    names = []
    for technique, map_name in (("cluster", "map.json"), ("nmf", "map_nmf.json")):
        topics = load_topic_set(run.path(f"topics_{technique}.json"))
        if len(topics.regular()) >= 2:
            distance_map(topics, run.out / map_name)
            names.append(map_name)
        else:
            log.warning("%s: fewer than two topics, no distance map", technique)
        bars = f"bars_{technique}.json"
        export_topic_bars(topics, getattr(cfg, technique)["n_words"], run.out / bars)
        names.append(bars)
    run.register("viz", *names)


def _stage_eval(run: Run, cfg: PipelineConfig):
    e = cfg.eval
    truth = load_truth(e["truth"])
    sets = [load_topic_set(run.path(f"topics_{t}.json")) for t in ("nmf", "cluster")]
    suggestions = suggest_alignments(sets, truth, e["top_n"])
    (run.out / "suggestions.json").write_text(
        json.dumps(alignments_to_json(suggestions), indent=1) + "\n", encoding="utf-8")
    run.register("suggest", "suggestions.json")
    if e["annotations"] is not None:
        metrics = compute_metrics(load_annotations(e["annotations"], truth))
        (run.out / "report.md").write_text(render_report(metrics, "markdown"), encoding="utf-8")
        (run.out / "report.json").write_text(render_report(metrics, "json"), encoding="utf-8")
        run.register("eval", "report.md", "report.json")


STAGES = (
    ("ingest", _stage_ingest),
    ("vectorize", _stage_vectorize),
    ("train-nmf", _stage_nmf),
    ("train-cluster", _stage_cluster),
    ("viz", _stage_viz),
)


def run_pipeline(cfg: PipelineConfig) -> int:
    """Execute every stage; returns a process exit status.

    On failure the manifest still lists the stages that completed.
    """
    run = Run(cfg.output["dir"])
    stages = list(STAGES)
    if cfg.eval["enabled"]:
        stages.append(("eval", _stage_eval))
    for name, fn in stages:
        log.info("stage %s", name)
        try:
            fn(run, cfg)
        except ThemeforgeError as exc:
            log.error("stage %s failed: %s", name, exc)
            run.write_manifest("failed", f"{name}: {exc}")
            return 1
    run.write_manifest("ok")
    return 0
