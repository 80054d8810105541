# File: tests/conftest.py

import numpy as np
import pytest

from src.states_measurements import make_standard_states


@pytest.fixture
def rng():
    """Fresh, fixed-seed random stream per test."""
    return np.random.default_rng(20240611)


@pytest.fixture
def mixed4():
    return make_standard_states(4, 'mixed')


@pytest.fixture
def plus4():
    return make_standard_states(4, 'plus')
