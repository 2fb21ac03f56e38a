import numpy as np
import pytest

from rabihubbard.schemas import BathParams, ModelParams, SolverOptions

# ε = ω0, z = 3, γq = γc = 1e-4 ω0
FIG_GAMMA = 1e-4


@pytest.fixture
def bath():
    return BathParams(gamma_q=FIG_GAMMA, gamma_c=FIG_GAMMA)


@pytest.fixture
def warm_bath():
    return BathParams(gamma_q=FIG_GAMMA, gamma_c=FIG_GAMMA, temp_q=0.05, temp_c=0.05)


@pytest.fixture
def deep_strong():
    """g = 1.5 ω0, the reference point of the two-level comparisons."""
    return ModelParams(g=1.5)


@pytest.fixture
def solver():
    return SolverOptions()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
