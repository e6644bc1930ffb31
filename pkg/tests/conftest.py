import pytest

from magpair import TABLE1, derive_constants

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        key = (marker.args[0], marker.args[1])
        passed = _criteria.get(key, True) and report.outcome == "passed"
        _criteria[key] = passed


def _split(number):
    text = str(number)
    digits = "".join(ch for ch in text if ch.isdigit())
    return int(digits), text[len(digits):]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    grouped = {}
    for (number, title), passed in _criteria.items():
        main, part = _split(number)
        grouped.setdefault(main, []).append((part, title, passed))
    for main in sorted(grouped):
        parts = sorted(grouped[main])
        verdict = "PASS" if all(p for _, _, p in parts) else "FAIL"
        if len(parts) == 1:
            terminalreporter.write_line(f"criterion {main}: {verdict}  {parts[0][1]}")
            continue
        terminalreporter.write_line(f"criterion {main}: {verdict}")
        for part, title, passed in parts:
            terminalreporter.write_line(f"    {main}{part}: {'PASS' if passed else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def params():
    return TABLE1


@pytest.fixture(scope="session")
def consts(params):
    return derive_constants(params)
