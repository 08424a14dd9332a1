import numpy as np
import pytest

from thermospec import KStepPotential, WeakGibbsMetric, build_sft, full_shift, golden_mean


@pytest.fixture
def shift2():
    return full_shift(2)


@pytest.fixture
def golden():
    return golden_mean()


@pytest.fixture
def digit(shift2):
    return KStepPotential(shift2, 1, [0.0, 1.0])


@pytest.fixture
def binary_metric(shift2):
    return WeakGibbsMetric(KStepPotential.constant(shift2, -np.log(2.0)))


@pytest.fixture
def random_sft3():
    A = [[1, 1, 0], [0, 1, 1], [1, 0, 1]]
    return build_sft(3, A)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for i in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[i])
