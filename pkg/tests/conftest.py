import numpy as np
import pytest

from cosmeasure.core import normalize_set

_criteria: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _criteria.setdefault(mark.args[0], []).append((mark.args[1], rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        runs = _criteria[n]
        ok = all(outcome == "passed" for _, outcome in runs)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({runs[0][0]})")


@pytest.fixture
def square():
    """{e1, e2, -e1, -e2}"""
    e = np.eye(2)
    return normalize_set([e[0], e[1], -e[0], -e[1]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
