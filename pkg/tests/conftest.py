import numpy as np
import pytest

from covertbound.model import PolicyParams


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


@pytest.fixture
def policy():
    return PolicyParams(100_000_000, 0.05)


_CRITERIA: dict[str, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    failed = rep.failed
    prev = _CRITERIA.get(label)
    if rep.when == "call" or failed or prev is None:
        status = "FAIL" if failed or (prev is not None and prev[0] == "FAIL") else "PASS"
        duration = (prev[2] if prev else 0.0) + (rep.duration if rep.when == "call" else 0.0)
        _CRITERIA[label] = (status, item.name, duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA):
        status, name, duration = _CRITERIA[label]
        terminalreporter.write_line(f"{status}  {label}  ({duration:.2f}s)")
