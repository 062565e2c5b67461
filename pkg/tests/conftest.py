import numpy as np
import pytest

from zoslice.targets import (
    GaussianTarget,
    LogisticRegressionTarget,
    TargetModel,
    generate_logistic_data,
)


class FlatTarget(TargetModel):
    """U(x) = constant; every Metropolis ratio is one."""

    def __init__(self, d, value=3.0):
        self.dimension = d
        self.value = value

    def _potential(self, x):
        return self.value

    def _potential_batch(self, X):
        return np.full(X.shape[0], self.value)


class ShiftedTarget(TargetModel):
    """U(x) + c; acceptance decisions must not depend on c."""

    def __init__(self, base, offset):
        self.base = base
        self.offset = offset
        self.dimension = base.dimension
        self.convexity = base.convexity
        self.smoothness = base.smoothness

    def _potential(self, x):
        return self.base._potential(x) + self.offset

    def _potential_batch(self, X):
        return self.base._potential_batch(X) + self.offset


@pytest.fixture(scope="session")
def small_logistic():
    Z, y, _ = generate_logistic_data(11, 12, 6)
    return LogisticRegressionTarget(Z, y)


@pytest.fixture(scope="session")
def gauss2_aniso():
    return GaussianTarget.diagonal([1.0, 0.25])


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
