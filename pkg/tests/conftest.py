import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(key, title): exit criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key, title = marker.args
    if report.failed or (report.when == "call" and key not in _results):
        _results[key] = (title, "FAIL" if report.failed else "PASS")
    elif report.when == "call" and report.passed and _results[key][1] != "FAIL":
        _results[key] = (title, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=lambda k: int(k[2:])):
        title, status = _results[key]
        terminalreporter.write_line(f"{key} {status}  {title}")
