import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from qsumm.fixtures import bundled_path, load_bundled_fixture  # noqa: E402
from qsumm.features import load_embeddings  # noqa: E402


@pytest.fixture(scope="session")
def fixture_samples():
    return load_bundled_fixture()


@pytest.fixture(scope="session")
def fixture_table():
    return load_embeddings(str(bundled_path("fixture_embeddings.txt")))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, after the normal report."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when not in ("call", "setup"):
                continue
            if outcome == "passed" and rep.when != "call":
                continue
            name = nodeid.split("::")[-1]
            lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines, key=lambda x: int(x[0].split("_")[2])):
            terminalreporter.write_line(f"{status}  {name}")
