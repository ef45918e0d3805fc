from __future__ import annotations

import hashlib
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given
from hypothesis import strategies as st

from themeforge.corpus_ingest import (
    Corpus,
    FetchConfig,
    PagedDocument,
    ReportFetcher,
    ReportId,
    build_report_url,
    extract_report_ids,
    fetch_many,
    fetch_report,
    ingest,
    load_corpus,
    split_pages,
)
from themeforge.errors import (
    ConfigurationError,
    EmptyCorpusError,
    NotFoundError,
    TransportError,
    ValidationError,
)


class TestExtractReportIds:
    def test_empty(self):
        assert extract_report_ids("") == []

    def test_search_fixture_matches_manifest(self, fixtures_dir):
        html = (fixtures_dir / "scraper" / "search_page.html").read_text()
        manifest = json.loads((fixtures_dir / "scraper" / "search_page.manifest.json").read_text())
        assert extract_report_ids(html) == manifest["ids"] == ["GAO-21-145", "GAO-20-003"]

    def test_duplicates_collapse(self):
        html = '<a href="/products/gao-21-145">GAO-21-145</a> <p>see GAO-21-145</p>'
        assert extract_report_ids(html) == ["GAO-21-145"]

    def test_text_and_suffix_letters(self):
        html = "<li>GAO-19-587SP and gao-22-104</li>"
        assert extract_report_ids(html) == ["GAO-19-587SP", "GAO-22-104"]

    def test_malformed_html_still_scanned(self):
        assert extract_report_ids("<div><a href='/x/gao-20-003'>unterminated") == ["GAO-20-003"]

    def test_custom_pattern(self):
        assert extract_report_ids("<p>RPT-0001 RPT-0002</p>", r"RPT-\d{4}") == ["RPT-0001", "RPT-0002"]

    def test_invalid_pattern(self):
        with pytest.raises(ConfigurationError):
            extract_report_ids("<p/>", "GAO-(")

    @given(st.lists(st.tuples(st.integers(10, 99), st.integers(1, 999)), max_size=20))
    def test_duplicate_free_and_first_appearance_order(self, pairs):
        ids = [f"GAO-{a}-{b}" for a, b in pairs]
        html = "".join(f'<a href="/products/{i.lower()}">{i}</a>' for i in ids)
        assert extract_report_ids(html) == list(dict.fromkeys(ids))


class TestBuildReportUrl:
    def test_substitution(self):
        assert (build_report_url("GAO-21-145", "https://example.gov/assets/{id}.pdf")
                == "https://example.gov/assets/gao-21-145.pdf")
        assert build_report_url("GAO-20-003", "file://fixtures/{id}.txt") == "file://fixtures/gao-20-003.txt"

    @pytest.mark.parametrize("template", ["no placeholder", "{id}/{id}"])
    def test_placeholder_count(self, template):
        with pytest.raises(ConfigurationError):
            build_report_url("GAO-21-145", template)


class TestFetch:
    def test_fixture_present(self, tmp_path):
        (tmp_path / "GAO-21-145.txt").write_bytes(b"page one\fpage two")
        cfg = FetchConfig(mode="fixture", fixture_dir=tmp_path)
        assert fetch_report("gao-21-145", cfg) == b"page one\fpage two"

    def test_fixture_absent(self, tmp_path):
        cfg = FetchConfig(mode="fixture", fixture_dir=tmp_path)
        with pytest.raises(NotFoundError) as info:
            fetch_report("GAO-99-1", cfg)
        assert info.value.report_id == "GAO-99-1"

    def test_config_validation(self, tmp_path):
        with pytest.raises(ConfigurationError):
            FetchConfig(mode="ftp", fixture_dir=tmp_path)
        with pytest.raises(ConfigurationError):
            FetchConfig(mode="http")

    def test_fetch_many_fixture(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "GAO-21-145.txt").write_text("a\fb")
        out = tmp_path / "out"
        records = fetch_many(["GAO-21-145", "GAO-21-145", "GAO-1-2"], FetchConfig(fixture_dir=src), out)
        assert [r.status for r in records] == ["ok", "missing"]
        assert (out / "GAO-21-145.txt").read_text() == "a\fb"


@pytest.fixture
def http_server():
    arrivals: list[float] = []

    class Handler(BaseHTTPRequestHandler):
        def do_GET(self):
            arrivals.append(time.monotonic())
            if "missing" in self.path:
                self.send_error(404)
                return
            if "broken" in self.path:
                self.send_error(503)
                return
            body = f"report at {self.path}".encode()
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", arrivals
    server.shutdown()
    server.server_close()


class TestHttpFetch:
    def test_politeness_delay_between_sequential_fetches(self, http_server):
        base, arrivals = http_server
        fetcher = ReportFetcher(FetchConfig(mode="http", template=base + "/{id}.pdf", delay_ms=250))
        assert fetcher.fetch("GAO-21-145") == b"report at /gao-21-145.pdf"
        first_done = fetcher._last_done
        fetcher.fetch("GAO-20-003")
        assert len(arrivals) == 2
        assert arrivals[1] - first_done >= 0.250

    def test_404_is_not_found(self, http_server):
        base, _ = http_server
        cfg = FetchConfig(mode="http", template=base + "/missing/{id}", delay_ms=0)
        with pytest.raises(NotFoundError):
            fetch_report("GAO-21-145", cfg)

    def test_server_error_is_retryable_transport(self, http_server, tmp_path):
        base, arrivals = http_server
        cfg = FetchConfig(mode="http", template=base + "/broken/{id}", delay_ms=0, retries=2)
        with pytest.raises(TransportError) as info:
            fetch_report("GAO-21-145", cfg)
        assert info.value.retryable
        before = len(arrivals)
        records = fetch_many(["GAO-21-145"], cfg, tmp_path)
        assert records[0].status == "failed"
        assert len(arrivals) - before == 3

    def test_connection_refused(self):
        cfg = FetchConfig(mode="http", template="http://127.0.0.1:9/{id}", delay_ms=0, timeout_s=2)
        with pytest.raises(TransportError):
            fetch_report("GAO-21-145", cfg)


class TestSplitPages:
    def test_three_pages(self):
        docs = split_pages("GAO-1-1", "a\fb\fc")
        assert [d.text for d in docs] == ["a", "b", "c"]
        assert [d.page_no for d in docs] == [1, 2, 3]

    def test_single_page(self):
        docs = split_pages("GAO-1-1", "only page")
        assert len(docs) == 1 and docs[0].page_no == 1

    def test_trailing_separator_dropped(self):
        assert [d.text for d in split_pages("GAO-1-1", "a\f")] == ["a"]

    def test_empty_input_gives_one_empty_page(self):
        docs = split_pages("GAO-1-1", "")
        assert len(docs) == 1 and docs[0].text == ""

    def test_trims_whitespace(self):
        assert [d.text for d in split_pages("gao-1-1", "  a \n\f\n b ")] == ["a", "b"]
        assert split_pages("gao-1-1", "x")[0].report_id == "GAO-1-1"

    @given(st.lists(st.text(alphabet=st.characters(blacklist_characters="\f"), max_size=30),
                    min_size=1, max_size=8))
    def test_partition_loses_no_characters(self, pages):
        text = "\f".join(pages)
        docs = split_pages("GAO-1-1", text)
        joined = "\f".join(d.text for d in docs)
        assert "".join(joined.split()).replace("\f", "") == "".join(text.split()).replace("\f", "")
        assert [d.page_no for d in docs] == list(range(1, len(docs) + 1))


class TestTypes:
    def test_report_id_normalized(self):
        assert ReportId(" gao-21-145 ") == "GAO-21-145"
        with pytest.raises(ValidationError):
            ReportId("  ")

    def test_page_no_positive(self):
        with pytest.raises(ValidationError):
            PagedDocument("GAO-1-1", 0, "x")

    def test_corpus_sorted_and_unique(self):
        c = Corpus((PagedDocument("GAO-2-1", 1, "b"), PagedDocument("GAO-1-1", 2, "a2"),
                    PagedDocument("GAO-1-1", 1, "a1")))
        assert c.keys == [("GAO-1-1", 1), ("GAO-1-1", 2), ("GAO-2-1", 1)]
        with pytest.raises(ValidationError):
            Corpus((PagedDocument("GAO-1-1", 1, "a"), PagedDocument("GAO-1-1", 1, "b")))


class TestIngest:
    def _write(self, d, name, pages):
        (d / name).write_text("\f".join(pages), encoding="utf-8")

    def test_counts_pages(self, tmp_path):
        self._write(tmp_path, "GAO-21-145.txt", ["a", "b", "c"])
        self._write(tmp_path, "GAO-20-003.txt", ["d", "e"])
        corpus = ingest(tmp_path, tmp_path / "corpus.jsonl")
        assert len(corpus) == 5
        assert corpus.keys[0] == ("GAO-20-003", 1)
        assert {s.report_id for s in corpus.source_manifest} == {"GAO-21-145", "GAO-20-003"}

    def test_empty_dir(self, tmp_path):
        with pytest.raises(EmptyCorpusError):
            ingest(tmp_path, tmp_path / "corpus.jsonl")

    def test_rerun_is_byte_identical(self, mini_dir, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        ingest(mini_dir / "reports", a)
        ingest(mini_dir / "reports", b)
        digest = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
        assert digest(a) == digest(b)

    def test_bad_files_skipped_with_warning(self, tmp_path):
        self._write(tmp_path, "GAO-21-145.txt", ["a"])
        (tmp_path / "GAO-20-003.txt").write_bytes(b"\xff\xfe\xfa broken")
        self._write(tmp_path, "notes.txt", ["x"])
        corpus = ingest(tmp_path)
        assert len(corpus) == 1
        status = {s.report_id: (s.status, s.warning) for s in corpus.source_manifest}
        assert status["GAO-20-003"][0] == "skipped" and status["GAO-20-003"][1]
        assert status["NOTES"][0] == "skipped"

    def test_store_format_roundtrip(self, tmp_path):
        self._write(tmp_path, "GAO-21-145.txt", ["café page", "two"])
        store = tmp_path / "c.jsonl"
        corpus = ingest(tmp_path, store)
        raw = store.read_bytes()
        assert b"\r\n" not in raw
        lines = raw.decode("utf-8").splitlines()
        assert json.loads(lines[0]) == {"report_id": "GAO-21-145", "page_no": 1, "text": "café page"}
        assert list(json.loads(lines[0])) == ["report_id", "page_no", "text"]
        assert load_corpus(store).documents == corpus.documents
