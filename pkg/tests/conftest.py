import pytest

_verdicts = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    report = (yield).get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and not report.failed):
        return
    key = mark.args[0]
    title = (item.function.__doc__ or item.name).strip().splitlines()[0]
    # a parametrized criterion passes only if every case does
    ok = report.passed and _verdicts.get(key, (True, title))[0]
    _verdicts[key] = (ok, title)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_verdicts, key=lambda k: (isinstance(k, str), k)):
        ok, title = _verdicts[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {title}")
