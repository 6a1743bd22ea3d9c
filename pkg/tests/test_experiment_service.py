from services import binomial_tail
from services.experiment_service import ExperimentService


def test_identity_suite_checks_relative_error():
    grid = [(20, 9, 1.3), (200, 150, 0.2), (300, 10, 3.0), (5000, 4990, 0.01)]
    result = ExperimentService._suite_identity(grid)
    assert result.passed
    assert (result.checked, result.skipped) == (3, 1)
    assert result.worst <= 1e-10


def test_identity_suite_flags_small_relative_drift(monkeypatch):
    # an absolute 1e-10 limit would let this through on the tiny right-hand sides
    def drifted(m, n, x):
        return binomial_tail.identity_rhs(m, n, x) * (1 + 1e-8)

    monkeypatch.setattr(binomial_tail, "identity_gap", drifted)
    result = ExperimentService._suite_identity([(200, 150, 0.2), (300, 10, 3.0)])
    assert not result.passed
    assert result.worst > 1e-9
