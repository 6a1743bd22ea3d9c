import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from constants import (
    ASYMPTOTE_HEADER,
    CONSTANT_HEADER,
    CONTOUR_HEADER,
    DENSITY_HEADER,
    EXPECTED_HEADER,
    ZERO_HEADER,
    EnsembleModel,
    MeanRegime,
)
from services import asymptotics, binomial_tail, kac_rice, lemniscate, polynomial, zero_counter
from utils.errors import DomainError
from utils.schemas import (
    EnsembleSpec,
    GridWindow,
    QuadratureConfig,
    SolverConfig,
    SuiteResult,
    TrialOutcome,
)

logger = logging.getLogger(__name__)

TAIL_TOLERANCE = 1e-10
IDENTITY_TOLERANCE = 1e-10
C_ALPHA_TOLERANCE = 1e-12
MOMENT_Z_LIMIT = 4.0
# exact tails below this are outside double range and not compared
UNDERFLOW = 1e-300
MOMENT_CASES = [(6, 6, 1.0), (8, 4, 0.5), (8, 4, 2.0)]


def _finite(value: float) -> Optional[float]:
    # JSON has no NaN; statistics over zero certified trials come out as null
    return value if math.isfinite(value) else None


class ExperimentService:
    """Runs every command of the harness and returns tables and JSON-ready documents.

    The CLI and the HTTP app both go through this class, so a given configuration produces
    the same numbers on either surface.
    """

    def __init__(self, workers: int = 1, progress: bool = False):
        self.workers = workers
        self.progress = progress

    @staticmethod
    def make_spec(
        n: int,
        m: Optional[int] = None,
        alpha: Optional[float] = None,
        model: EnsembleModel = EnsembleModel.TRUNCATED,
        seed: Optional[int] = None,
    ) -> EnsembleSpec:
        values: Dict[str, Any] = {"n": n, "m": m, "alpha": alpha, "model": model}
        if seed is not None:
            values["seed"] = seed
        try:
            return EnsembleSpec(**values)
        except ValidationError as exc:
            raise DomainError(str(exc)) from exc

    # Kac-Rice tables

    @staticmethod
    def kacrice_reference(n: int, m: int, model: EnsembleModel, quadrature: QuadratureConfig = QuadratureConfig()) -> float:
        """Expected zero count from the engine; the li-wei ensemble coincides with it only at m = n."""
        if model == EnsembleModel.LI_WEI and m < n:
            raise DomainError("the Kac-Rice engine covers the li-wei model only for m = n")
        return kac_rice.expected_zero_count(n, m, quadrature)

    @staticmethod
    def predicted(n: int, m: int, fixed_m: bool, model: EnsembleModel) -> float:
        if model == EnsembleModel.LI_WEI or m == n:
            # truncation at m = n is the li-wei ensemble
            return asymptotics.predicted_mean(n, m, model=EnsembleModel.LI_WEI)
        if fixed_m or m == 0:
            return asymptotics.predicted_mean(n, m, MeanRegime.FIXED_M)
        return asymptotics.predicted_mean(n, m, MeanRegime.PROPORTIONAL)

    def expected_rows(
        self,
        ns: Sequence[int],
        m: Optional[int] = None,
        alpha: Optional[float] = None,
        model: EnsembleModel = EnsembleModel.TRUNCATED,
        quadrature: QuadratureConfig = QuadratureConfig(),
    ) -> List[list]:
        """Rows n, m, alpha_eff, kacrice, predicted, ratio, sorted by n."""
        if not ns:
            raise DomainError("need at least one degree")
        if (m is None) == (alpha is None):
            raise DomainError("give exactly one of m and alpha")
        rows = []
        for n in sorted(set(ns)):
            spec = self.make_spec(n, m=m, alpha=alpha, model=model)
            value = self.kacrice_reference(spec.n, spec.m, model, quadrature)
            predicted = self.predicted(spec.n, spec.m, alpha is None, model)
            rows.append([spec.n, spec.m, spec.alpha_eff, value, predicted, value / predicted])
            logger.info("expected n=%d m=%d: %.10g (predicted %.6g)", spec.n, spec.m, value, predicted)
        return rows

    @staticmethod
    def density_rows(n: int, m: int, radii: Sequence[float]) -> List[list]:
        if not radii:
            raise DomainError("r grid is empty")
        if any(r < 0 or not math.isfinite(r) for r in radii):
            raise DomainError("radii must be finite and nonnegative")
        return [[r, density, n, m] for r, density in kac_rice.density_profile(n, m, sorted(radii))]

    @staticmethod
    def constant_rows(alphas: Sequence[float]) -> List[list]:
        return [[a, asymptotics.c_alpha(a), asymptotics.critical_radius(a)] for a in sorted(set(alphas))]

    def asymptote_rows(
        self,
        alphas: Sequence[float],
        ns: Sequence[int],
        quadrature: QuadratureConfig = QuadratureConfig(),
    ) -> Tuple[List[list], Dict[str, Any]]:
        """Rows n, m, alpha_eff, predicted, computed, ratio and a two-term fit per alpha."""
        rows, fits = [], {}
        for alpha in sorted(set(alphas)):
            asymptotics.c_alpha(alpha)
            block = []
            for n in sorted(set(ns)):
                spec = self.make_spec(n, alpha=alpha)
                predicted = asymptotics.predicted_mean(spec.n, spec.m, MeanRegime.PROPORTIONAL)
                computed = kac_rice.expected_zero_count(spec.n, spec.m, quadrature)
                block.append([spec.n, spec.m, spec.alpha_eff, predicted, computed, computed / predicted])
            rows.extend(block)
            if len(block) >= 2:
                c, d = asymptotics.fit_leading_coefficient([r[0] for r in block], [r[4] for r in block])
                target = asymptotics.c_alpha(alpha)
                fits[format(alpha, "g")] = {"c": c, "d": d, "c_alpha": target, "relative_error": abs(c - target) / target}
        return rows, fits

    # Monte Carlo

    def montecarlo(
        self,
        spec: EnsembleSpec,
        trials: int,
        solver: SolverConfig = SolverConfig(),
        quadrature: QuadratureConfig = QuadratureConfig(),
    ) -> Tuple[Dict[str, Any], List[TrialOutcome]]:
        """SampleStatistics as a document, with the Kac-Rice reference and the z-score against it."""
        outcomes = zero_counter.run_trials(spec, trials, solver, self.workers, self.progress)
        stats = zero_counter.summarize(spec, outcomes)
        try:
            reference = self.kacrice_reference(spec.n, spec.m, spec.model, quadrature)
        except DomainError:
            reference = None
        z_score = None
        if reference is not None and stats.certified_trials:
            if stats.stderr > 0:
                z_score = (stats.mean - reference) / stats.stderr
            elif math.isclose(stats.mean, reference, rel_tol=1e-9):
                z_score = 0.0
        document = {
            "spec": spec.model_dump(mode="json"),
            "trials": stats.trials,
            "certified_trials": stats.certified_trials,
            "mean": _finite(stats.mean),
            "variance": _finite(stats.variance),
            "stderr": _finite(stats.stderr),
            "mean_plus": _finite(stats.mean_plus),
            "mean_minus": _finite(stats.mean_minus),
            "failures": stats.failures,
            "resamples": stats.resamples,
            "histogram": [{"count": c, "freq": f} for c, f in sorted(stats.histogram.items())],
            "kacrice": reference,
            "z_score": z_score,
            "variance_over_n2": _finite(stats.variance / spec.n ** 2),
            "valid": stats.valid,
            "notes": stats.notes,
        }
        return document, outcomes

    @staticmethod
    def zero_table(outcomes: Sequence[TrialOutcome]) -> Tuple[List[str], List[list]]:
        return ZERO_HEADER, zero_counter.zero_rows(outcomes)

    @staticmethod
    def sample_document(spec: EnsembleSpec, stream: int, find: bool = True, solver: SolverConfig = SolverConfig()) -> Dict[str, Any]:
        F = polynomial.sample(spec, stream)
        document: Dict[str, Any] = {
            "spec": spec.model_dump(mode="json"),
            "stream": stream,
            "attempt": F.attempt,
            "a": [[c.real, c.imag] for c in F.a],
            "b": [[c.real, c.imag] for c in F.b],
            "root_radius_bound": polynomial.root_radius_bound(F),
        }
        if find:
            document["zeros"] = zero_counter.find_zeros(F, solver).model_dump(mode="json")
        return document

    # lemniscate

    def lemniscate(
        self,
        spec: EnsembleSpec,
        stream: int = 0,
        window: GridWindow = GridWindow(),
        full_disk: bool = False,
    ) -> Tuple[Dict[str, Any], np.ndarray, List[Tuple[complex, complex]]]:
        """Mask, contour segments and component report of one sample."""
        F = polynomial.sample(spec, stream)
        grid, mask, report = lemniscate.mask_summary(F, window, full_disk)
        segments = lemniscate.lemniscate_segments(F, grid)
        document = {
            "spec": spec.model_dump(mode="json"),
            "stream": stream,
            "window": grid.model_dump(mode="json"),
            "components": report.count,
            "touching_boundary": report.touching_boundary,
            "bound": max(spec.n - 1, 0),
            "segments": len(segments),
        }
        return document, mask, segments

    def lemniscate_survey(
        self,
        spec: EnsembleSpec,
        trials: int,
        window: GridWindow = GridWindow(),
        full_disk: bool = False,
        check_doubling: bool = False,
    ) -> Dict[str, Any]:
        survey = lemniscate.component_survey(spec, trials, window, full_disk, check_doubling, self.progress)
        document = survey.model_dump(mode="json")
        document["violations"] = survey.violations
        document["max_count"] = max(survey.counts) if survey.counts else 0
        if check_doubling:
            document["stable_share"] = survey.stable_share
        return document

    @staticmethod
    def contour_table(segments: Sequence[Tuple[complex, complex]]) -> Tuple[List[str], List[list]]:
        rows = []
        for segment_id, (start, end) in enumerate(segments):
            rows.append([segment_id, start.real, start.imag])
            rows.append([segment_id, end.real, end.imag])
        return CONTOUR_HEADER, rows

    # self-test

    @staticmethod
    def _random_grid(seed: int, points: int) -> List[Tuple[int, int, float]]:
        rng = np.random.default_rng(seed)
        grid = []
        for _ in range(points):
            n = int(rng.integers(1, 201))
            m = int(rng.integers(0, n + 1))
            x = float(10.0 * (1.0 - rng.random()))
            grid.append((n, m, x))
        return grid

    @staticmethod
    def _suite_tail_exact(grid) -> SuiteResult:
        worst, skipped = 0.0, 0
        for n, m, x in grid:
            exact = float(binomial_tail.tail_ratio_exact(m, n, x))
            if exact < UNDERFLOW:
                skipped += 1
                continue
            worst = max(worst, abs(binomial_tail.tail_ratio(m, n, x) - exact) / exact)
        return SuiteResult(
            name="tail_ratio_vs_exact",
            passed=worst <= TAIL_TOLERANCE,
            checked=len(grid) - skipped,
            skipped=skipped,
            worst=worst,
            detail=f"relative error limit {TAIL_TOLERANCE:g}",
        )

    @staticmethod
    def _suite_identity(grid) -> SuiteResult:
        worst, checked, skipped = 0.0, 0, 0
        for n, m, x in grid:
            # q_{m,n} - q_{m-1,n-1} = binom(n-1, m) x^m / (1+x)^n needs m <= n-1
            m = min(m, n - 1)
            rhs = binomial_tail.identity_rhs(m, n, x)
            if rhs < UNDERFLOW:
                skipped += 1
                continue
            worst = max(worst, abs(binomial_tail.identity_gap(m, n, x) - rhs) / rhs)
            checked += 1
        return SuiteResult(
            name="tail_identity",
            passed=checked > 0 and worst <= IDENTITY_TOLERANCE,
            checked=checked,
            skipped=skipped,
            worst=worst,
            detail=f"relative error limit {IDENTITY_TOLERANCE:g}",
        )

    @staticmethod
    def _suite_moment(seed: int, trials: int) -> SuiteResult:
        worst = 0.0
        for stream, (n, m, r) in enumerate(MOMENT_CASES):
            estimate = kac_rice.conditional_moment_oracle(complex(r), n, m, trials=trials, stream=stream, seed=seed)
            worst = max(worst, abs(estimate.z_score))
        return SuiteResult(
            name="conditional_moment_oracle",
            passed=worst <= MOMENT_Z_LIMIT,
            checked=len(MOMENT_CASES),
            worst=worst,
            detail=f"|z| limit {MOMENT_Z_LIMIT:g} at {trials} trials",
        )

    @staticmethod
    def _suite_c_alpha() -> SuiteResult:
        alphas = [k / 10.0 for k in range(1, 10)]
        worst = max(abs(asymptotics.c_alpha(a) - asymptotics.c_alpha_integral(a)) for a in alphas)
        return SuiteResult(name="c_alpha_closed_form", passed=worst <= C_ALPHA_TOLERANCE, checked=len(alphas), worst=worst)

    @staticmethod
    def _suite_full_integrand() -> SuiteResult:
        worst, checked = 0.0, 0
        for n in (1, 5, 20, 100):
            for r in (0.1, 0.5, 1.0, 2.0, 10.0):
                full = kac_rice.radial_integrand_full(r, n)
                worst = max(worst, abs(kac_rice.radial_integrand(r, n, n) - full) / full)
                checked += 1
        return SuiteResult(name="full_truncation_integrand", passed=worst <= 1e-10, checked=checked, worst=worst)

    @staticmethod
    def _suite_claim_bound() -> SuiteResult:
        failures, checked = 0, 0
        for n in (10, 50):
            for m in (0, n // 2, n):
                for r in (0.05, 0.3, 1.0, 3.0, 20.0):
                    failures += not kac_rice.claim_bound_holds(r, n, m)
                    checked += 1
        return SuiteResult(name="claim_bound", passed=failures == 0, checked=checked, worst=float(failures))

    def selftest(self, seed: int, quick: bool = False) -> Dict[str, Any]:
        """Oracle suites; `quick` shrinks the random grid and the Monte Carlo sizes."""
        grid = self._random_grid(seed, 100 if quick else 500)
        suites = [
            self._suite_tail_exact(grid),
            self._suite_identity(grid),
            self._suite_moment(seed, 20_000 if quick else 100_000),
            self._suite_c_alpha(),
            self._suite_full_integrand(),
            self._suite_claim_bound(),
        ]
        for suite in suites:
            level = logging.INFO if suite.passed else logging.ERROR
            logger.log(level, "%s: %s (worst %.3g over %d)", suite.name, "ok" if suite.passed else "FAILED", suite.worst, suite.checked)
        return {"suites": [s.model_dump(mode="json") for s in suites], "passed": all(s.passed for s in suites)}

    # headers, kept here so both surfaces emit identical columns

    HEADERS = {
        "expected": EXPECTED_HEADER,
        "density": DENSITY_HEADER,
        "asymptote": ASYMPTOTE_HEADER,
        "constants": CONSTANT_HEADER,
    }
