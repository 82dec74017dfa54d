from pathlib import Path

import pytest

from fostrends.taxonomy import FieldOfStudy, Taxonomy, load_default_taxonomy

DATA = Path(__file__).parent / "data"
FIXTURE_CORPUS = DATA / "fixture_corpus.jsonl"

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    num, title = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _criteria.get(num, (title, "PASS"))[1]
        status = "PASS" if report.passed and prev == "PASS" else "FAIL"
        _criteria[num] = (title, status)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result()._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status = _criteria[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {title}")


def make_taxonomy(edges, keywords=None, extra=()):
    """Small taxonomy from ``(parent, child)`` pairs; every node gets a keyword."""
    keywords = keywords or {}
    ids = sorted({n for e in edges for n in e} | set(extra) | set(keywords))
    fields = [FieldOfStudy(i, i.title(), tuple(keywords.get(i, (f"kw {i}",)))) for i in ids]
    return Taxonomy.build(fields, edges)


@pytest.fixture(scope="session")
def default_taxonomy():
    return load_default_taxonomy()


@pytest.fixture
def chain():
    return make_taxonomy([("root", "a"), ("a", "b")])


@pytest.fixture
def diamond():
    return make_taxonomy([("root", "a"), ("root", "b"), ("a", "c"), ("b", "c")])
