import numpy as np
import pytest

from isetsim.ontology import ModelParams

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_line():
    """Record one PASS/FAIL line for the acceptance summary (also printed)."""
    def emit(criterion: str, passed: bool, detail: str) -> None:
        label = f"criterion {criterion}" if criterion[0].isdigit() else criterion
        line = f"[{label}] {'PASS' if passed else 'FAIL'}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def desk():
    return ModelParams(N=1024, delta=0.02, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
