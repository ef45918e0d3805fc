"""Report discovery, download, page splitting and the JSON-lines corpus store.

Reports enter the corpus as *paged text*: UTF-8 text with a form feed
(``\\f``) between pages. Converting PDFs to that format is left to an
external tool (``pdftotext`` emits exactly this layout).
"""

from __future__ import annotations

import json
import logging
import re
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import urlparse

from .errors import (
    ConfigurationError,
    EmptyCorpusError,
    NotFoundError,
    TransportError,
    ValidationError,
)

log = logging.getLogger(__name__)

DEFAULT_ID_PATTERN = r"GAO-\d{2,4}-\d+[A-Z]*"
PAGE_SEPARATOR = "\f"


class ReportId(str):
    """Upper-cased, whitespace-stripped report number such as ``GAO-21-145``."""

    def __new__(cls, value):
        value = str(value).strip().upper()
        if not value:
            raise ValidationError("report id must be non-empty")
        return super().__new__(cls, value)


@dataclass(frozen=True)
class PagedDocument:
    report_id: ReportId
    page_no: int
    text: str

    def __post_init__(self):
        if not isinstance(self.report_id, ReportId):
            object.__setattr__(self, "report_id", ReportId(self.report_id))
        if self.page_no < 1:
            raise ValidationError(f"page_no must be >= 1, got {self.page_no}")

    @property
    def key(self) -> tuple[str, int]:
        return (str(self.report_id), self.page_no)

    def to_json(self) -> dict:
        return {"report_id": str(self.report_id), "page_no": self.page_no, "text": self.text}


@dataclass(frozen=True)
class SourceRecord:
    report_id: ReportId
    origin: str
    retrieved_at: str
    status: str = "ok"
    warning: str | None = None


@dataclass(frozen=True)
class Corpus:
    documents: tuple[PagedDocument, ...]
    source_manifest: tuple[SourceRecord, ...] = ()

    def __post_init__(self):
        docs = tuple(sorted(self.documents, key=lambda d: d.key))
        keys = [d.key for d in docs]
        if len(set(keys)) != len(keys):
            raise ValidationError("duplicate (report_id, page_no) in corpus")
        object.__setattr__(self, "documents", docs)
        object.__setattr__(self, "source_manifest", tuple(self.source_manifest))

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def texts(self) -> list[str]:
        return [d.text for d in self.documents]

    @property
    def keys(self) -> list[tuple[str, int]]:
        return [d.key for d in self.documents]


def _compile(pattern: str) -> re.Pattern:
    try:
        return re.compile(pattern, re.IGNORECASE)
    except re.error as exc:
        raise ConfigurationError(f"invalid report-id pattern {pattern!r}: {exc}") from exc


class _HrefTextCollector(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            for name, value in attrs:
                if name == "href" and value:
                    self.chunks.append(value)

    def handle_data(self, data):
        self.chunks.append(data)


def extract_report_ids(html: str, pattern: str = DEFAULT_ID_PATTERN) -> list[ReportId]:
    """Return distinct report ids from anchor hrefs and element text.

    Matching is case-insensitive; results are upper-cased and kept in the
    order they first appear in the document.
    """
    regex = _compile(pattern)
    collector = _HrefTextCollector()
    collector.feed(html)
    collector.close()

    seen: dict[str, None] = {}
    for chunk in collector.chunks:
        for match in regex.finditer(chunk):
            seen.setdefault(match.group(0).upper(), None)
    return [ReportId(v) for v in seen]


def build_report_url(report_id: str, template: str) -> str:
    count = template.count("{id}")
    if count != 1:
        raise ConfigurationError(
            f"URL template must contain exactly one '{{id}}' placeholder, found {count}: {template!r}"
        )
    return template.replace("{id}", str(ReportId(report_id)).lower())


@dataclass(frozen=True)
class FetchConfig:
    mode: str = "fixture"
    template: str | None = None
    fixture_dir: Path | None = None
    delay_ms: int = 1000
    timeout_s: float = 30.0
    retries: int = 2
    max_workers: int = 1

    def __post_init__(self):
        if self.mode not in ("http", "fixture"):
            raise ConfigurationError(f"unknown fetch mode {self.mode!r}")
        if self.mode == "http" and not self.template:
            raise ConfigurationError("http mode needs a URL template")
        if self.mode == "fixture" and self.fixture_dir is None:
            raise ConfigurationError("fixture mode needs fixture_dir")
        if self.delay_ms < 0 or self.max_workers < 1 or self.retries < 0:
            raise ConfigurationError("delay_ms, retries must be >= 0 and max_workers >= 1")


class ReportFetcher:
    """Fetch report payloads, spacing HTTP requests by the politeness delay.

    The delay is measured from the completion of one request to the start
    of the next and is enforced across worker threads.
    """

    def __init__(self, config: FetchConfig):
        self.config = config
        self._lock = threading.Lock()
        self._last_done: float | None = None

    def fetch(self, report_id: str) -> bytes:
        report_id = ReportId(report_id)
        if self.config.mode == "fixture":
            return self._fetch_fixture(report_id)
        return self._fetch_http(report_id)

    def url_for(self, report_id: str) -> str:
        if self.config.mode == "fixture":
            return self._fixture_path(ReportId(report_id)).as_uri()
        return build_report_url(report_id, self.config.template)

    def _fixture_path(self, report_id: ReportId) -> Path:
        root = Path(self.config.fixture_dir)
        if root.is_dir():
            for path in sorted(root.iterdir()):
                if path.is_file() and report_id in (path.name.upper(), path.stem.upper()):
                    return path
        raise NotFoundError(report_id, f"no fixture file in {root}")

    def _fetch_fixture(self, report_id: ReportId) -> bytes:
        return self._fixture_path(report_id).read_bytes()

    def _fetch_http(self, report_id: ReportId) -> bytes:
        url = build_report_url(report_id, self.config.template)
        with self._lock:
            if self._last_done is not None:
                wait = self._last_done + self.config.delay_ms / 1000.0 - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
            try:
                with urllib.request.urlopen(url, timeout=self.config.timeout_s) as resp:
                    return resp.read()
            except urllib.error.HTTPError as exc:
                if exc.code == 404:
                    raise NotFoundError(report_id, url) from exc
                raise TransportError(f"HTTP {exc.code} for {url}") from exc
            except (urllib.error.URLError, OSError) as exc:
                raise TransportError(f"fetching {url}: {exc}") from exc
            finally:
                self._last_done = time.monotonic()


def fetch_report(report_id: str, config: FetchConfig) -> bytes:
    return ReportFetcher(config).fetch(report_id)


def _suffix_for(fetcher: ReportFetcher, report_id: ReportId) -> str:
    if fetcher.config.mode == "fixture":
        return fetcher._fixture_path(report_id).suffix
    return Path(urlparse(fetcher.url_for(report_id)).path).suffix or ".bin"


def fetch_many(ids: Iterable[str], config: FetchConfig, out_dir: Path) -> list[SourceRecord]:
    """Download every id into ``out_dir`` as ``<ID><suffix>``.

    Transport errors are retried ``config.retries`` times; missing reports
    are recorded in the returned manifest rather than raised.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fetcher = ReportFetcher(config)

    def one(rid: ReportId) -> SourceRecord:
        for attempt in range(config.retries + 1):
            try:
                payload = fetcher.fetch(rid)
                break
            except NotFoundError as exc:
                log.warning("%s", exc)
                return SourceRecord(rid, fetcher.config.template or "", _now(), "missing", str(exc))
            except TransportError as exc:
                log.warning("attempt %d for %s failed: %s", attempt + 1, rid, exc)
                if attempt == config.retries:
                    return SourceRecord(rid, fetcher.url_for(rid), _now(), "failed", str(exc))
        target = out_dir / f"{rid}{_suffix_for(fetcher, rid)}"
        target.write_bytes(payload)
        return SourceRecord(rid, fetcher.url_for(rid), _now())

    unique = list(dict.fromkeys(ReportId(i) for i in ids))
    with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
        return list(pool.map(one, unique))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def split_pages(report_id: str, paged_text: str) -> list[PagedDocument]:
    segments = paged_text.split(PAGE_SEPARATOR)
    if len(segments) > 1 and not segments[-1].strip():
        segments.pop()
    return [PagedDocument(ReportId(report_id), i, seg.strip()) for i, seg in enumerate(segments, 1)]


def write_corpus(corpus: Corpus, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus.documents:
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False))
            fh.write("\n")


def load_corpus(path: Path) -> Corpus:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                docs.append(PagedDocument(obj["report_id"], int(obj["page_no"]), obj["text"]))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad corpus record: {exc}") from exc
    if not docs:
        raise EmptyCorpusError(f"{path} holds no documents")
    return Corpus(tuple(docs))


def ingest(
    input_dir: Path,
    output_store: Path | None = None,
    pattern: str = DEFAULT_ID_PATTERN,
) -> Corpus:
    """Split every ``<report_id>.txt`` under ``input_dir`` into pages.

    Files that cannot be read or decoded, or whose stem is not a report id,
    are skipped and recorded in the source manifest with a warning.
    """
    input_dir = Path(input_dir)
    regex = _compile(pattern)
    docs: list[PagedDocument] = []
    sources: list[SourceRecord] = []
    for path in sorted(input_dir.glob("*.txt")):
        stamp = datetime.fromtimestamp(path.stat().st_mtime, timezone.utc).isoformat(timespec="seconds")
        if not regex.fullmatch(path.stem):
            msg = f"file name {path.name} is not a report id"
            log.warning(msg)
            sources.append(SourceRecord(ReportId(path.stem), str(path), stamp, "skipped", msg))
            continue
        rid = ReportId(path.stem)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            log.warning("skipping %s: %s", path, exc)
            sources.append(SourceRecord(rid, str(path), stamp, "skipped", str(exc)))
            continue
        docs.extend(split_pages(rid, text))
        sources.append(SourceRecord(rid, str(path), stamp))

    if not docs:
        raise EmptyCorpusError(f"no documents ingested from {input_dir}")
    corpus = Corpus(tuple(docs), tuple(sorted(sources, key=lambda s: s.report_id)))
    if output_store is not None:
        write_corpus(corpus, output_store)
    return corpus


def write_source_manifest(sources: Sequence[SourceRecord], path: Path) -> None:
    rows = [
        {"report_id": str(s.report_id), "origin": s.origin, "retrieved_at": s.retrieved_at,
         "status": s.status, "warning": s.warning}
        for s in sources
    ]
    Path(path).write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
