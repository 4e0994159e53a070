import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hierlid.synthetic import make_dataset  # noqa: E402

_criteria = {}


@pytest.fixture(scope="session")
def small_dataset():
    return make_dataset(n_train=120, n_test=60, seed=3, vocab_size=600)


@pytest.fixture(scope="session")
def za_dataset():
    return make_dataset(n_train=300, n_test=200, seed=0)


def data_root() -> Path:
    return Path(os.environ.get("HIERLID_DATA", Path(__file__).parent.parent / "data"))


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    state = _criteria.setdefault(marker, {"failed": 0, "passed": 0, "skipped": 0})
    if report.failed:
        state["failed"] += 1
    elif report.skipped:
        state["skipped"] += 1
    elif report.when == "call":
        state["passed"] += 1


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        st = _criteria[n]
        verdict = "FAIL" if st["failed"] or not st["passed"] else "PASS"
        extra = f" ({st['skipped']} skipped)" if st["skipped"] else ""
        terminalreporter.write_line(f"criterion {n}: {verdict}{extra}")
