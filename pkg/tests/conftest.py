import numpy as np
import pytest

from ebmeans import ComplexityPrior, DataVector, ModelConfig


@pytest.fixture
def worked_example():
    """The n=2 case every backend is checked against: Y=(3,0), defaults."""
    cfg = ModelConfig(n=2)
    prior = ComplexityPrior(a=1.0, c=1.0)
    Y = DataVector(np.array([3.0, 0.0]))
    return cfg, prior, Y


@pytest.fixture
def strong_signal_case():
    """n=10 five-strong/five-null data at a fixed seed."""
    cfg = ModelConfig(n=10)
    theta = np.array([7.0] * 5 + [0.0] * 5)
    rng = np.random.default_rng(314159)
    return cfg, theta, DataVector(theta + rng.standard_normal(10))
