import numpy as np
import pytest

from confusion_attack.toy import clean_toy_image, toy_model

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    number, title = marker
    failed = report.failed
    prev = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev[1] and not failed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report._criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title}")


@pytest.fixture
def toy_a():
    return toy_model("toy-a")


@pytest.fixture
def toy_b():
    return toy_model("toy-b")


@pytest.fixture
def toy_c():
    return toy_model("toy-c")


@pytest.fixture
def train_pair(toy_a, toy_b):
    return [toy_a, toy_b]


@pytest.fixture
def clean_image():
    return clean_toy_image()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
