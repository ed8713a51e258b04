"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _RESULTS.setdefault(number, {"title": title, "passed": 0, "failed": []})
    if report.when == "call":
        if report.passed and not hasattr(report, "wasxfail"):
            entry["passed"] += 1
        else:
            entry["failed"].append(item.name)
    elif report.failed or (report.when == "setup" and report.skipped):
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        total = entry["passed"] + len(entry["failed"])
        verdict = "FAIL" if entry["failed"] else "PASS"
        line = f"{verdict} criterion {number}: {entry['title']} ({entry['passed']}/{total} checks)"
        if entry["failed"]:
            line += " failing: " + ", ".join(entry["failed"])
        terminalreporter.write_line(line)
