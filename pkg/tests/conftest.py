import warnings

import numpy as np
import pytest

from parobs.analysis import example31_design, example32_design
from parobs.sturm_liouville import SLProblem, analytic_eigensystem


@pytest.fixture(scope="session")
def nn_problem():
    return SLProblem(p=1.0, q=0.0, a0=0.0, b0=1.0, a1=0.0, b1=1.0)


@pytest.fixture(scope="session")
def nn_basis(nn_problem):
    return analytic_eigensystem(nn_problem, 40, 1001)


@pytest.fixture(scope="session")
def ex31_design():
    with warnings.catch_warnings():
        warnings.simplefilter("error")  # design synthesis must be warning-free
        return example31_design(p=1.0)


@pytest.fixture(scope="session")
def ex32_design():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        return example32_design(p=1.0, q=0.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
