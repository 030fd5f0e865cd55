"""Collects one pass/fail line per acceptance criterion and prints them after the run."""

import pytest

_LINES: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): test gating one acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and report.passed):
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if report.failed:
        msg = str(report.longrepr).strip().splitlines()
        detail = (detail + " | " if detail else "") + (msg[-1] if msg else "failed")
        _LINES[number] = ("FAIL", title, detail)
    elif report.skipped:
        _LINES[number] = ("SKIP", title, detail)
    elif number not in _LINES:
        _LINES[number] = ("PASS", title, detail)
    elif _LINES[number][0] == "PASS" and detail:
        _LINES[number] = ("PASS", title, f"{_LINES[number][2]}, {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LINES):
        status, title, detail = _LINES[number]
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}" + (f": {detail}" if detail else ""))
