import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tripletmc.hamiltonians import HeisenbergParams, HubbardParams, make_model  # noqa: E402
from tripletmc.lattice import LatticeSpec  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running statistical or end-to-end check")


@pytest.fixture
def heis2():
    return make_model(HeisenbergParams(1.0, LatticeSpec("chain", 2, 1)))


@pytest.fixture
def heis2x2():
    return make_model(HeisenbergParams(1.0, LatticeSpec("square", 2, 2, (True, True))))


@pytest.fixture
def hub2():
    return make_model(HubbardParams(1.0, 4.0, LatticeSpec("chain", 2, 1), 1, 1))


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, title: str, ok: bool, detail: str) -> None:
    """Record and print one acceptance line, then fail the test if ``ok`` is false."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
