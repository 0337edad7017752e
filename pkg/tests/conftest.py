import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cocite.corpus import ArticleRef, Case, CaseSet, parse_article_ref  # noqa: E402

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    key = getattr(report, "acceptance", None)
    if key is None:
        return
    prev = _acceptance.get(key, "PASS")
    _acceptance[key] = prev if report.passed else "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        rep.acceptance = (mark.args[0], mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), status in sorted(_acceptance.items()):
        terminalreporter.write_line(f"[{status}] criterion {num}: {title}")


def refs(*raw):
    return frozenset(parse_article_ref(r) for r in raw)


def make_case(case_id, articles=(), items=()):
    return Case(case_id, refs(*articles), tuple(items))


@pytest.fixture
def paper_q():
    return refs("LSL/1", "LSL/3", "TA/5", "TA/7")


@pytest.fixture
def paper_x():
    return refs("LSL/1", "LSL/2", "TA/5", "TA/6")
