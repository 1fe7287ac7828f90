import numpy as np
import pytest

from qspai import GridSpec, assemble, material_uniform

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(number, passed, detail):
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid2_K():
    g = GridSpec(2, 2)
    return assemble(g, material_uniform(g, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
