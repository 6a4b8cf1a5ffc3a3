import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from bffs.backends import LatencyModel, MockBackend  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance check; printed in the terminal summary."""

    def check(name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
        return ok

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


FIXED = LatencyModel(
    mkdir_us=7,
    dir_search_us=3,
    create_us=25,
    write_base_us=4,
    write_per_block_us=10,
    open_us=2,
    read_base_us=5,
    read_per_block_us=3,
    app_gap_us=1,
)


@pytest.fixture
def fixed_latency():
    return FIXED


@pytest.fixture
def mock_backend():
    return MockBackend("/m", FIXED)
