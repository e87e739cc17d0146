from __future__ import annotations

import pytest


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", default=False,
                     help="run the hours-scale Monte Carlo suite")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="extended suite: pass --extended to run")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


_LINES: list[str] = []


@pytest.fixture
def report():
    """``report(criterion, ok, detail)`` prints and records one pass/fail line, then asserts ``ok``.

    ``ok=None`` records an informational line without asserting.
    """

    def _report(criterion: str, ok: bool | None, detail: str) -> None:
        tag = "INFO" if ok is None else "PASS" if ok else "FAIL"
        line = f"[criterion {criterion}] {tag}: {detail}"
        print(line)
        _LINES.append(line)
        assert ok is None or ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
