import numpy as np
import pytest

from krerank.core import EmbeddingSet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def line(*xs):
    """Points on a line as an EmbeddingSet."""
    return EmbeddingSet(np.asarray(xs, dtype=float)[:, None])


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        for key, label in getattr(report, "user_properties", []):
            if key == "criterion":
                outcome = {"passed": "PASS", "failed": "FAIL"}.get(report.outcome, "SKIP")
                _ACCEPTANCE.append((label, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{outcome:4s}  {label}")
