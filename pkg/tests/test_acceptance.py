"""Desk-scale acceptance runs. Slow: run with `pytest -m slow`."""
import math

import numpy as np
import pytest

from services.asymptotics import c_alpha, density_asymptotic, fit_decay_rate, fit_leading_coefficient, inside_deviation, laplace_rate
from services.experiment_service import ExperimentService
from services.kac_rice import conditional_moment_oracle, expected_zero_count, kr_density
from services.lemniscate import component_survey
from services.zero_counter import run_trials, summarize
from utils.schemas import EnsembleSpec, GridWindow

pytestmark = pytest.mark.slow


def test_leading_coefficient_recovery():
    ns = [100, 200, 400, 800, 1600]
    c, _ = fit_leading_coefficient(ns, [expected_zero_count(n, n // 2) for n in ns])
    assert abs(c - c_alpha(0.5)) / c_alpha(0.5) <= 0.05


def test_fixed_m_regime():
    ratios = [expected_zero_count(n, 2) / n for n in (100, 400, 1600)]
    assert 0.95 <= ratios[-1] <= 1.05
    distances = [abs(r - 1) for r in ratios]
    assert distances[0] > distances[1] > distances[2]


def test_kac_rice_against_monte_carlo():
    spec = EnsembleSpec(n=8, m=4, seed=20240619)
    outcomes = run_trials(spec, 2000, workers=4)
    stats = summarize(spec, outcomes)
    assert stats.certified_trials >= 0.95 * 2000
    assert abs(stats.mean - expected_zero_count(8, 4)) <= 3 * stats.stderr
    for outcome in outcomes:
        if outcome.certified:
            result = outcome.result
            assert result.n_plus - result.n_minus == 8
            assert 8 <= result.total <= 64


def test_full_truncation_has_more_zeros():
    spec_full, spec_half = EnsembleSpec(n=8, m=8), EnsembleSpec(n=8, m=4)
    full = summarize(spec_full, run_trials(spec_full, 500, workers=4))
    half = summarize(spec_half, run_trials(spec_half, 500, workers=4))
    assert full.mean >= half.mean


def test_randomized_tail_grid():
    grid = ExperimentService._random_grid(seed=7, points=500)
    assert ExperimentService._suite_tail_exact(grid).passed
    assert ExperimentService._suite_identity(grid).passed


def test_laplace_regimes():
    slope, _ = fit_decay_rate(0.5, 3.0, list(range(100, 2001, 100)))
    assert abs(slope + laplace_rate(3.0, 0.5).rate) <= 0.02 * laplace_rate(3.0, 0.5).rate
    values = inside_deviation(0.5, 0.5, [2 ** k for k in range(7, 12)])
    assert values[-3] >= values[-2] >= values[-1]


@pytest.mark.parametrize("n,m,r", [(6, 6, 1.0), (8, 4, 0.5), (8, 4, 2.0)])
def test_conditional_moment_oracle(n, m, r):
    assert abs(conditional_moment_oracle(complex(r), n, m, trials=100_000, seed=1).z_score) <= 4


def test_phase_transition():
    n = 400
    for r in (0.25, 0.5, 0.75):
        assert kr_density(complex(r), n, n // 2) == pytest.approx(density_asymptotic(r, n, 0.5), rel=0.15)
    for r in (1.5, 2.0):
        assert kr_density(complex(r), n, n // 2) == pytest.approx(density_asymptotic(r, n, 0.5), rel=0.25)


def test_lemniscate_component_bound():
    spec = EnsembleSpec(n=20, m=20)
    survey = component_survey(spec, 100, GridWindow(resolution=1024), full_disk=True, check_doubling=True)
    assert max(survey.counts) <= 19 or all(d <= 19 for c, d in zip(survey.counts, survey.doubled_counts) if c > 19)
    assert survey.stable_share >= 0.95
    # the chart resolves the small components near the origin
    assert max(survey.counts) >= 2


def test_variance_over_n_squared():
    service = ExperimentService(workers=4)
    for n in (6, 9, 12):
        document, _ = service.montecarlo(service.make_spec(n, m=int(math.floor(n / 2 + 0.5))), 2000)
        assert document["valid"]
        assert np.isfinite(document["variance_over_n2"])
