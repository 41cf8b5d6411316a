from pathlib import Path

import pytest

from etacheck.abstraction import abstractions
from etacheck.smt import SolverClient
from etacheck.syntax import load_ta, parse_ta

BENCH = Path(__file__).resolve().parent.parent / "benchmarks"


@pytest.fixture(scope="session")
def bench() -> Path:
    return BENCH


@pytest.fixture(scope="session")
def voting():
    return load_ta(BENCH / "voting.ta")


@pytest.fixture(scope="session")
def client():
    return SolverClient()


@pytest.fixture(scope="session")
def voting_atas(voting, client):
    return abstractions(voting, client)


@pytest.fixture
def make_ta():
    return parse_ta


def _acceptance_lines(config) -> list:
    if not hasattr(config, "_acceptance_lines"):
        config._acceptance_lines = []
    return config._acceptance_lines


@pytest.fixture
def acceptance_log(request):
    lines = _acceptance_lines(request.config)

    def log(label: str, ok: bool, detail: str) -> None:
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = _acceptance_lines(config)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
