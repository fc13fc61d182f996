import numpy as np
import pytest

from betaspace.transform import TubeSet

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def tubes3() -> TubeSet:
    return TubeSet((100.0, 150.0, 200.0))


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def record(criterion: int, ok: bool, detail: str) -> None:
        line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_tubes(rng: np.random.Generator, n: int) -> TubeSet:
    L = np.cumsum(rng.uniform(5.0, 100.0, n))
    return TubeSet(tuple(L))
