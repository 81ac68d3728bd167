import numpy as np
import pytest

from adasparse import MeasurementOracle, Signal


@pytest.fixture
def rng():
    return np.random.default_rng(0xA5A5)


def oracle_for(values) -> MeasurementOracle:
    return MeasurementOracle(Signal(np.asarray(values, dtype=np.float64)))
