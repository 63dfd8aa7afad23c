import pytest

_results: dict = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None and (report.when == "call" or report.failed or report.skipped):
        number, title = mark.args
        prev = _results.get(number, (title, "PASS"))
        status = prev[1] if report.passed else ("SKIP" if report.skipped else "FAIL")
        if prev[1] == "FAIL":
            status = "FAIL"
        _results[number] = (title, status)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, status = _results[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
