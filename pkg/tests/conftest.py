import numpy as np
import pytest

from cascadelab.model import CapacityDistribution, LoadSurgeFunction, ModelFamily


@pytest.fixture
def affine_family():
    return ModelFamily(CapacityDistribution.uniform(), LoadSurgeFunction.affine(1.0, 1.0))


@pytest.fixture
def redistribution_family():
    return ModelFamily(CapacityDistribution.uniform(), LoadSurgeFunction.redistribution(1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
