from __future__ import annotations

import pytest

from creditnet import new_network
from creditnet.clearing import ClearingConfig
from creditnet.model import load_network_file

from helpers import DATA


@pytest.fixture
def chain3():
    return load_network_file(DATA / "chain3.json")


@pytest.fixture
def single_default():
    return new_network(["A", "B"], [[0, 10], [0, 0]], [4, 0])


@pytest.fixture
def mutual_default():
    return new_network(["A", "B"], [[0, 10], [6, 0]], [2, 0])


@pytest.fixture
def config():
    return ClearingConfig()


_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
