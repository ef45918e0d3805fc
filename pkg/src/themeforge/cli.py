"""``themeforge`` command line. Logs go to stderr; artifacts go to ``--out``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .cluster import ClusterConfig, fit_cluster_topics
from .config import validate_config
from .corpus_ingest import (
    DEFAULT_ID_PATTERN,
    FetchConfig,
    extract_report_ids,
    fetch_many,
    ingest,
    load_corpus,
    write_source_manifest,
)
from .errors import ConfigurationError, ThemeforgeError
from .eval_harness import (
    alignments_to_json,
    compute_metrics,
    load_annotations,
    load_truth,
    render_report,
    suggest_alignments,
)
from .nmf import nmf_fit, nmf_topics, save_model
from .pipeline import run_pipeline
from .topic_viz import distance_map, export_topic_bars
from .topics import load_topic_set, save_topic_set
from .vectorize import build_vocabulary, count_matrix, load_stop_words, tfidf_transform

log = logging.getLogger("themeforge")


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_scrape_ids(args) -> int:
    html = Path(args.html_file).read_text(encoding="utf-8", errors="replace")
    for rid in extract_report_ids(html, args.pattern):
        print(rid)
    return 0


def cmd_fetch(args) -> int:
    ids = [line.strip() for line in Path(args.ids).read_text(encoding="utf-8").splitlines() if line.strip()]
    cfg = FetchConfig(
        mode=args.mode,
        template=args.template,
        fixture_dir=Path(args.fixture_dir) if args.fixture_dir else None,
        delay_ms=args.delay_ms,
        max_workers=args.workers,
    )
    records = fetch_many(ids, cfg, Path(args.out))
    write_source_manifest(records, Path(args.out) / "fetch_manifest.json")
    failed = [r for r in records if r.status != "ok"]
    log.info("fetched %d of %d reports", len(records) - len(failed), len(records))
    return 1 if failed else 0


def cmd_ingest(args) -> int:
    corpus = ingest(Path(args.dir), Path(args.out), pattern=args.pattern)
    write_source_manifest(corpus.source_manifest, Path(str(args.out) + ".sources.json"))
    log.info("wrote %d pages to %s", len(corpus), args.out)
    return 0


def cmd_train_nmf(args) -> int:
    corpus = load_corpus(Path(args.corpus))
    stops = frozenset() if args.no_stop_words else load_stop_words(args.stop_words)
    vocab = build_vocabulary(corpus, args.min_df, args.max_df_ratio, stops)
    A = tfidf_transform(count_matrix(corpus, vocab), args.idf)
    model = nmf_fit(A, k=args.k, seed=args.seed, max_iter=args.max_iter, tol=args.tol)
    save_topic_set(nmf_topics(model, vocab, args.n_words), Path(args.out))
    if args.model_out:
        save_model(model, Path(args.model_out))
    log.info("nmf: %d sweeps, error %.6g", len(model.objective_trace), model.objective)
    return 0


def cmd_train_cluster(args) -> int:
    corpus = load_corpus(Path(args.corpus))
    result = fit_cluster_topics(corpus, ClusterConfig(
        provider=args.provider,
        emb_file=Path(args.emb_file) if args.emb_file else None,
        dims=args.dims,
        reduce_dims=args.reduce_dims,
        min_cluster_size=args.min_cluster_size,
        min_samples=args.min_samples,
        seed=args.seed,
        n_words=args.n_words,
        include_outlier=args.include_outlier,
        embed_stop_words=load_stop_words(None) if args.provider == "lsa" else frozenset(),
    ))
    save_topic_set(result.topics, Path(args.out))
    log.info("cluster: %d clusters", result.labels.n_clusters)
    return 0


def cmd_distance_map(args) -> int:
    distance_map(load_topic_set(Path(args.topics)), Path(args.out))
    return 0


def cmd_topic_bars(args) -> int:
    export_topic_bars(load_topic_set(Path(args.topics)), args.n_words, Path(args.out))
    return 0


def cmd_suggest(args) -> int:
    sets = [load_topic_set(Path(p)) for p in args.topics]
    suggestions = suggest_alignments(sets, load_truth(Path(args.truth)), args.top_n)
    _emit(json.dumps(alignments_to_json(suggestions), indent=1) + "\n", args.out)
    return 0


def cmd_eval(args) -> int:
    truth = load_truth(Path(args.truth))
    metrics = compute_metrics(load_annotations(Path(args.annotations), truth))
    fmt = args.format or ("json" if args.out and str(args.out).endswith(".json") else "markdown")
    _emit(render_report(metrics, fmt), args.out)
    return 0


def cmd_run(args) -> int:
    return run_pipeline(validate_config(Path(args.config)))


def cmd_validate(args) -> int:
    validate_config(Path(args.config))
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="themeforge", description=__doc__)
    p.add_argument("--version", action="version", version=f"themeforge {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scrape-ids", help="list report ids found in a search-results page")
    s.add_argument("html_file")
    s.add_argument("--pattern", default=DEFAULT_ID_PATTERN)
    s.set_defaults(func=cmd_scrape_ids)

    s = sub.add_parser("fetch", help="download reports by id")
    s.add_argument("--ids", required=True, help="file with one report id per line")
    s.add_argument("--template", help="download URL containing one {id} placeholder")
    s.add_argument("--mode", choices=("http", "fixture"), default="http")
    s.add_argument("--fixture-dir")
    s.add_argument("--delay-ms", type=int, default=1000)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fetch)

    s = sub.add_parser("ingest", help="split paged-text reports into a JSON-lines corpus")
    s.add_argument("dir")
    s.add_argument("--out", required=True)
    s.add_argument("--pattern", default=DEFAULT_ID_PATTERN)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("train-nmf", help="NMF topics over TF-IDF")
    s.add_argument("--corpus", required=True)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--max-iter", type=int, default=500)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--n-words", type=int, default=10)
    s.add_argument("--min-df", type=int, default=1)
    s.add_argument("--max-df-ratio", type=float, default=1.0)
    s.add_argument("--idf", choices=("smooth", "plain"), default="smooth")
    s.add_argument("--stop-words", help="stop-word file (default: bundled English list)")
    s.add_argument("--no-stop-words", action="store_true")
    s.add_argument("--model-out")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_nmf)

    s = sub.add_parser("train-cluster", help="embed / reduce / HDBSCAN / c-TF-IDF topics")
    s.add_argument("--corpus", required=True)
    s.add_argument("--provider", choices=("lsa", "file"), default="lsa")
    s.add_argument("--emb-file")
    s.add_argument("--dims", type=int, default=50)
    s.add_argument("--reduce-dims", type=int, default=5)
    s.add_argument("--min-cluster-size", type=int, default=5)
    s.add_argument("--min-samples", type=int)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--n-words", type=int, default=10)
    s.add_argument("--include-outlier", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_cluster)

    s = sub.add_parser("distance-map", help="2-D intertopic distance map JSON")
    s.add_argument("--topics", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_distance_map)

    s = sub.add_parser("topic-bars", help="top-word bar chart JSON")
    s.add_argument("--topics", required=True)
    s.add_argument("--n-words", type=int, default=10)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_topic_bars)

    s = sub.add_parser("suggest", help="rank candidate topic / vision element pairs")
    s.add_argument("--topics", required=True, action="append", help="repeatable")
    s.add_argument("--truth", required=True)
    s.add_argument("--top-n", type=int, default=5)
    s.add_argument("--out")
    s.set_defaults(func=cmd_suggest)

    s = sub.add_parser("eval", help="metrics report from human annotations")
    s.add_argument("--truth", required=True)
    s.add_argument("--annotations", required=True)
    s.add_argument("--format", choices=("markdown", "json"))
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("run", help="full pipeline from a TOML config")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("validate-config", help="check a pipeline config")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigurationError as exc:
        for err in exc.errors:
            log.error("config: %s", err)
        return 2
    except (ThemeforgeError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
