import numpy as np
import pytest

from pomaint.experiments import (
    make_benchmark_instance,
    motivating_costs,
    motivating_model,
    reference_estimates,
)
from pomaint.model import CostStructure
from pomaint.solver import BeliefGrid


@pytest.fixture(scope="session")
def small_model():
    """The 3-state / 2-hidden-state walkthrough system."""
    return motivating_model()


@pytest.fixture(scope="session")
def small_costs():
    return motivating_costs()


@pytest.fixture(scope="session")
def printed_costs():
    """The walkthrough cost structure with the replacement costs as printed
    in the source text (the shipped file swaps them; see repo docs)."""
    return CostStructure(c_o1=[10, 20, 30], c_o2=[5, 40],
                         c_s=10, c_r1=30, c_r2=100, gamma=0.95)


@pytest.fixture(scope="session")
def estimated_model():
    return reference_estimates()


@pytest.fixture(scope="session")
def base_instance():
    """Factorial benchmark instance with every factor at choice 1."""
    _, model, costs = make_benchmark_instance((1, 1, 1, 1, 1, 1))
    return model, costs


@pytest.fixture(scope="session")
def coarse_grid():
    return BeliefGrid.from_step(0.02, 2)


@pytest.fixture(scope="session")
def fine_grid():
    return BeliefGrid.from_step(0.002, 2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
