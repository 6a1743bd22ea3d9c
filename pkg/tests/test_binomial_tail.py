import math

import mpmath
import numpy as np
import pytest

from services.binomial_tail import (
    identity_gap,
    identity_rhs,
    log_binomial,
    tail_ratio,
    tail_ratio_complement,
    tail_ratio_exact,
    tail_ratio_integral,
)
from utils.errors import DomainError


def test_worked_example():
    # (1 + 4 + 6) / 16
    assert tail_ratio(2, 4, 1.0) == pytest.approx(0.6875, abs=1e-14)
    assert float(tail_ratio_exact(2, 4, 1.0)) == pytest.approx(0.6875, abs=1e-40)


def test_identity_worked_example():
    # q_{2,4}(1) - q_{1,3}(1) = 11/16 - 8/16
    assert identity_gap(2, 4, 1.0) == pytest.approx(3.0 / 16.0, abs=1e-14)
    assert identity_rhs(2, 4, 1.0) == pytest.approx(3.0 / 16.0, abs=1e-14)


def test_edge_conventions():
    assert tail_ratio(-1, 5, 2.0) == 0.0
    assert tail_ratio(5, 5, 2.0) == 1.0
    assert tail_ratio(7, 5, 2.0) == 1.0
    assert tail_ratio(0, 5, 0.0) == 1.0
    assert tail_ratio(0, 5, 1.0) == pytest.approx(1.0 / 32.0, rel=1e-14)


def test_array_input_keeps_shape():
    xs = np.array([0.0, 0.5, 1.0, 4.0])
    values = tail_ratio(2, 6, xs)
    assert values.shape == xs.shape
    assert values[0] == 1.0
    assert np.all(np.diff(values) < 0)


def test_rejects_negative_or_infinite_x():
    with pytest.raises(DomainError):
        tail_ratio(2, 4, -0.5)
    with pytest.raises(DomainError):
        tail_ratio(2, 4, math.inf)


@pytest.mark.parametrize("n", [1, 7, 40, 200])
@pytest.mark.parametrize("x", [1e-3, 0.3, 1.0, 2.5, 10.0])
def test_matches_exact_summation(n, x):
    for m in sorted({0, n // 3, n // 2, n - 1}):
        exact = float(tail_ratio_exact(m, n, x))
        if exact < 1e-300:
            continue
        assert tail_ratio(m, n, x) == pytest.approx(exact, rel=1e-10)


def test_complement_avoids_cancellation():
    # q is within 1e-70 of 1 here; 1 - q would be lost in double precision
    n, m, x = 200, 150, 0.2
    with mpmath.workdps(50):
        upper = sum(mpmath.binomial(n, k) * mpmath.mpf(x) ** k for k in range(m + 1, n + 1))
        exact = upper / (1 + mpmath.mpf(x)) ** n
    assert float(tail_ratio_complement(m, n, x)) == pytest.approx(float(exact), rel=1e-9)


@pytest.mark.parametrize("n,m", [(10, 4), (60, 20), (150, 100)])
def test_complement_sums_to_one(n, m):
    for x in (0.1, 1.0, 3.0):
        assert tail_ratio(m, n, x) + tail_ratio_complement(m, n, x) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("n,m", [(10, 3), (40, 20), (100, 70)])
def test_integral_representation(n, m):
    for x in (0.2, 1.0, 5.0):
        assert tail_ratio_integral(m, n, x) == pytest.approx(tail_ratio(m, n, x), rel=1e-9)


def test_integral_representation_needs_interior_m():
    with pytest.raises(DomainError):
        tail_ratio_integral(0, 10, 1.0)
    with pytest.raises(DomainError):
        tail_ratio_integral(9, 10, 1.0)


def test_monotone_in_x():
    xs = np.linspace(0.0, 20.0, 401)
    for n, m in [(5, 2), (30, 10), (120, 60)]:
        assert np.all(np.diff(tail_ratio(m, n, xs)) <= 0)


def test_nondecreasing_in_m():
    for n, x in [(12, 0.4), (80, 1.0), (200, 3.0)]:
        values = [tail_ratio(m, n, x) for m in range(-1, n + 1)]
        assert all(b >= a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("n", [3, 10, 50, 200])
def test_log_concave_in_degree(n):
    # q_{m,n} q_{m-2,n-2} <= q_{m-1,n-1}^2
    for m in range(1, n + 1):
        for x in (0.1, 0.9, 2.0, 7.5):
            lhs = tail_ratio(m, n, x) * tail_ratio(m - 2, n - 2, x)
            rhs = tail_ratio(m - 1, n - 1, x) ** 2
            assert lhs <= rhs + 1e-12


@pytest.mark.parametrize("n,m,x", [(5, 1, 0.7), (20, 9, 1.3), (100, 50, 2.0), (150, 3, 0.05), (200, 150, 0.2), (300, 10, 3.0)])
def test_identity_against_closed_form(n, m, x):
    rhs = identity_rhs(m, n, x)
    assert 0 < rhs
    assert identity_gap(m, n, x) == pytest.approx(rhs, rel=1e-10)


def test_exact_limits():
    with pytest.raises(DomainError):
        tail_ratio_exact(2, 6000, 1.0)
    with pytest.raises(DomainError):
        tail_ratio_exact(2, 10, 1.0, digits=0)
    assert tail_ratio_exact(-1, 10, 1.0) == 0
    assert tail_ratio_exact(10, 10, 1.0) == 1


def test_log_binomial():
    assert log_binomial(4, 2) == pytest.approx(math.log(6.0), rel=1e-14)
    assert log_binomial(9, 0) == 0.0
    assert log_binomial(9, 9) == 0.0
    expected = float(mpmath.log(mpmath.binomial(1000, 400)))
    assert log_binomial(1000, 400) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        log_binomial(3, 4)
