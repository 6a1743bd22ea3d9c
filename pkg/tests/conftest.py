import pytest

from utils.schemas import EnsembleSpec, HarmonicPolynomial, QuadratureConfig, SolverConfig


@pytest.fixture
def quadrature():
    return QuadratureConfig()


@pytest.fixture
def solver():
    return SolverConfig()


@pytest.fixture
def small_spec():
    return EnsembleSpec(n=6, m=3, seed=12345)


@pytest.fixture
def linear_map():
    # p(z) = 2z + 1, q(z) = 0.5j + z: J = 4 - 1 = 3 everywhere
    return HarmonicPolynomial.from_coefficients([1.0, 2.0], [0.5j, 1.0])


@pytest.fixture
def unit_lemniscate():
    # p' = 2z, q' = 2: the orientation-reversing set is the open unit disk
    return HarmonicPolynomial.from_coefficients([0.0, 0.0, 1.0], [0.0, 2.0])


@pytest.fixture
def petals():
    # p' = z^5 - 2, q' = 1
    return HarmonicPolynomial.from_coefficients([0, -2, 0, 0, 0, 0, 1 / 6], [0, 1])
