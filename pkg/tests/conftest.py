from __future__ import annotations

import numpy as np
import pytest

from swtkit.ansatz import preset_n4_ansatz
from swtkit.dense import solve_exact
from swtkit.models import ModelSpec, ground_basis

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
    return passed


@pytest.fixture(scope="session")
def model4():
    return ModelSpec(4, 1.0)


@pytest.fixture(scope="session")
def basis4():
    return ground_basis(4)


@pytest.fixture(scope="session")
def preset():
    return preset_n4_ansatz()


@pytest.fixture(scope="session")
def exact4(model4, basis4):
    return solve_exact(model4.h0(), model4.v(), model4.epsilon, basis4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
