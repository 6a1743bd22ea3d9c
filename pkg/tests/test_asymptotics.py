import math

import pytest

from constants import EnsembleModel, MeanRegime, Regime
from services.asymptotics import (
    c_alpha,
    c_alpha_integral,
    classify_regime,
    critical_radius,
    density_asymptotic,
    endpoint_laplace_approximation,
    fit_decay_rate,
    fit_leading_coefficient,
    inside_deviation,
    laplace_rate,
    predicted_mean,
)
from services.binomial_tail import tail_ratio
from utils.errors import DegreeError, DomainError, PhaseBoundaryError

C_HALF = 0.1426990817


def test_c_alpha_at_one_half():
    assert c_alpha(0.5) == pytest.approx(C_HALF, abs=1e-10)
    assert critical_radius(0.5) == pytest.approx(1.0, rel=1e-15)
    assert critical_radius(0.8) == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("alpha", [k / 10 for k in range(1, 10)])
def test_c_alpha_closed_form_matches_integral(alpha):
    assert c_alpha(alpha) == pytest.approx(c_alpha_integral(alpha), abs=1e-12)


def test_c_alpha_limits_and_monotonicity():
    assert c_alpha(1e-12) == pytest.approx(0.0, abs=1e-12)
    assert c_alpha(1 - 1e-12) == pytest.approx(math.pi / 4, abs=1e-5)
    alphas = [k / 100 for k in range(1, 100)]
    constants = [c_alpha(a) for a in alphas]
    radii = [critical_radius(a) for a in alphas]
    assert all(b > a for a, b in zip(constants, constants[1:]))
    assert all(b > a for a, b in zip(radii, radii[1:]))


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
def test_alpha_endpoints_rejected(alpha):
    with pytest.raises(DomainError):
        c_alpha(alpha)
    with pytest.raises(DomainError):
        critical_radius(alpha)


def test_predicted_mean():
    assert predicted_mean(400, 200) == pytest.approx(1141.59, abs=0.01)
    assert predicted_mean(1000, 2, MeanRegime.FIXED_M) == 1000.0
    assert predicted_mean(64, 64, model=EnsembleModel.LI_WEI) == pytest.approx(math.pi / 4 * 512)
    assert predicted_mean(64, 32, model=EnsembleModel.LI_WEI) == 64.0
    with pytest.raises(DomainError):
        predicted_mean(10, 10)
    with pytest.raises(DegreeError):
        predicted_mean(10, 11)


def test_density_asymptotic_regimes():
    n = 300
    assert density_asymptotic(2.0, n, 0.5) == pytest.approx(n / (25 * math.pi), rel=1e-14)
    inside = density_asymptotic(0.5, n, 0.5)
    assert inside == pytest.approx(n ** 1.5 * 0.5 / (2 * math.pi * 1.25 ** 2), rel=1e-14)
    for angle in (0.3, 1.7, 4.0):
        assert density_asymptotic(0.5 * complex(math.cos(angle), math.sin(angle)), n, 0.5) == pytest.approx(inside, rel=1e-12)
    with pytest.raises(PhaseBoundaryError):
        density_asymptotic(1.0, n, 0.5)


def test_outside_rate():
    result = laplace_rate(3.0, 0.5)
    assert result.regime == Regime.OUTSIDE
    expected = math.log(0.5) - 0.5 * (math.log(0.75) + math.log(0.25))
    assert result.rate == pytest.approx(expected, rel=1e-12)
    assert result.rate == pytest.approx(0.1438, abs=5e-5)


def test_inside_rate():
    result = laplace_rate(0.5, 0.5)
    assert result.regime == Regime.INSIDE
    assert result.rate == 0.0


def test_phase_boundary():
    with pytest.raises(PhaseBoundaryError):
        laplace_rate(1.0, 0.5)
    assert classify_regime(1.0, 0.5).regime == Regime.CRITICAL
    with pytest.raises(DomainError):
        classify_regime(0.0, 0.5)


def test_rate_vanishes_continuously_at_the_boundary():
    rates = [laplace_rate(1.0 + eps, 0.5).rate for eps in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b < a for a, b in zip(rates, rates[1:]))
    assert rates[-1] < 1e-8


def test_endpoint_approximation_converges():
    errors = []
    for n in (100, 400, 1600):
        approx = endpoint_laplace_approximation(n // 2, n, 3.0)
        errors.append(abs(approx / tail_ratio(n // 2, n, 3.0) - 1))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.01
    with pytest.raises(DomainError):
        endpoint_laplace_approximation(50, 100, 0.5)


def test_decay_rate_regression():
    slope, _ = fit_decay_rate(0.5, 3.0, list(range(100, 2001, 100)))
    assert slope == pytest.approx(-laplace_rate(3.0, 0.5).rate, rel=0.02)


@pytest.mark.parametrize("alpha,x", [(0.5, 0.5), (0.7, 1.0)])
def test_inside_deviation_bounded(alpha, x):
    values = inside_deviation(alpha, x, [2 ** k for k in range(7, 12)])
    assert all(math.isfinite(v) for v in values)
    top = values[-3:]
    assert top[0] >= top[1] >= top[2]


def test_fit_leading_coefficient_recovers_exact_model():
    ns = [100, 200, 400, 800]
    c, d = fit_leading_coefficient(ns, [0.3 * n ** 1.5 - 0.2 * n for n in ns])
    assert c == pytest.approx(0.3, rel=1e-10)
    assert d == pytest.approx(-0.2, rel=1e-8)
    with pytest.raises(DomainError):
        fit_leading_coefficient([100], [1.0])
