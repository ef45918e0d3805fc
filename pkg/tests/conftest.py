from __future__ import annotations

from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

_criteria: list[tuple[str, str, str]] = []


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def mini_dir() -> Path:
    return FIXTURES / "mini"


@pytest.fixture
def replica_dir() -> Path:
    return FIXTURES / "replica"


@pytest.fixture
def mini_config(tmp_path, mini_dir):
    """Write a copy of the bundled mini config with absolute inputs and a private output dir."""

    def make(out_name="out", replace=None):
        text = (mini_dir / "pipeline.toml").read_text(encoding="utf-8")
        text = text.replace('input_dir = "reports"', f'input_dir = "{(mini_dir / "reports").as_posix()}"')
        text = text.replace('truth = "truth.json"', f'truth = "{(mini_dir / "truth.json").as_posix()}"')
        text = text.replace('annotations = "annotations.jsonl"',
                            f'annotations = "{(mini_dir / "annotations.jsonl").as_posix()}"')
        text = text.replace('dir = "out"', f'dir = "{out_name}"')
        for old, new in (replace or {}).items():
            text = text.replace(old, new)
        path = tmp_path / f"{out_name}.toml"
        path.write_text(text, encoding="utf-8")
        return path

    return make


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "setup" and report.passed:
        return
    if report.when == "teardown" and not report.failed:
        return
    status = "PASS" if report.passed else "FAIL"
    _criteria.append((status, marker.args[0], f"{call.duration:.2f}s"))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, elapsed in _criteria:
        terminalreporter.write_line(f"[{status}] {name} ({elapsed})")
