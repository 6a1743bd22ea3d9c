"""Zeros of a harmonic polynomial by multi-start damped Newton, with a winding certificate.

The zero set of F = p + conj(q) is found by running Newton's method on the real 2x2 system
Re F = Im F = 0 from a dense set of starting points. Completeness is checked with the
generalized argument principle: sense-preserving minus sense-reversing zeros must equal the
winding number of F at infinity. The check is necessary, not sufficient, since a missed pair
of opposite orientation leaves it intact.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from tqdm import tqdm

from constants import INVALID_FAILURE_SHARE, Orientation
from services.polynomial import derivatives, dominant_sign, evaluate, jacobian, root_radius_bound, sample
from utils.errors import DomainError, HarmonicZerosError, RadiusError, SolverError
from utils.schemas import (
    EnsembleSpec,
    HarmonicPolynomial,
    SampleStatistics,
    SolverConfig,
    TrialOutcome,
    ZeroCountResult,
    ZeroRecord,
)

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
# iterates wandering this far past the root radius are abandoned
ESCAPE_FACTOR = 8.0
MAX_WINDING_SAMPLES = 2 ** 20

CERTIFICATE_NOTE = (
    "winding certificate is necessary, not sufficient: a missed pair of zeros with "
    "opposite orientation leaves N+ - N- unchanged"
)


def spherical_starts(count: int, radius: float) -> np.ndarray:
    """`count` points in |z| <= radius, quasi-uniform for the spherical area dA / (1+|z|^2)^2.

    The spherical area inside |z| = r is proportional to r^2/(1+r^2), so equally spaced
    values of that fraction give the radii; angles advance by the golden angle.
    """
    if count < 1 or not radius > 0:
        raise DomainError("need a positive count and radius")
    cap = radius * radius / (1.0 + radius * radius)
    k = np.arange(count)
    t = (k + 0.5) / count * cap
    r = np.sqrt(t / (1.0 - t))
    return r * np.exp(1j * GOLDEN_ANGLE * k)


def _evaluation_scale(F: HarmonicPolynomial, z: np.ndarray) -> np.ndarray:
    r = np.abs(z)
    return 1.0 + P.polyval(r, np.abs(F.a)) + P.polyval(r, np.abs(F.b))


def _derivative_scale(F: HarmonicPolynomial, z: np.ndarray) -> np.ndarray:
    r = np.abs(z)
    scale = 1.0 + P.polyval(r, np.abs(P.polyder(F.a)))
    if F.m >= 1:
        scale = scale + P.polyval(r, np.abs(P.polyder(F.b)))
    return scale


def newton_polish(F: HarmonicPolynomial, starts: np.ndarray, solver: SolverConfig, radius: float) -> np.ndarray:
    """Damped Newton on Re F = Im F = 0, vectorized over the starting points.

    The real 2x2 step solves p' d + conj(q') conj(d) = -F, whose determinant is
    J = |p'|^2 - |q'|^2. Each step is halved until |F| decreases; a point stops when the step
    falls below step_tol * (1 + |z|), when no halving helps, or when it escapes.
    """
    z = np.array(starts, dtype=np.complex128)
    active = np.ones(z.shape, dtype=bool)
    for _ in range(solver.max_iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        zi = z[idx]
        f = evaluate(F, zi)
        dp, dq = derivatives(F, zi)
        jac = np.abs(dp) ** 2 - np.abs(dq) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = (np.conj(dq) * np.conj(f) - np.conj(dp) * f) / jac
        finite = np.isfinite(delta)
        active[idx[~finite]] = False
        idx, zi, f, delta = idx[finite], zi[finite], f[finite], delta[finite]
        if idx.size == 0:
            break

        f_abs = np.abs(f)
        lam = np.ones(idx.size)
        trial = zi + delta
        improved = np.abs(evaluate(F, trial)) < f_abs
        for _ in range(solver.max_halvings):
            pending = ~improved
            if not pending.any():
                break
            lam[pending] *= 0.5
            trial[pending] = zi[pending] + lam[pending] * delta[pending]
            improved[pending] = np.abs(evaluate(F, trial[pending])) < f_abs[pending]

        z[idx] = np.where(improved, trial, zi)
        step = lam * np.abs(delta)
        done = ~improved | (step < solver.step_tol * (1.0 + np.abs(z[idx]))) | (np.abs(z[idx]) > ESCAPE_FACTOR * radius)
        active[idx[done]] = False
    return z


def _accepted(F: HarmonicPolynomial, z: np.ndarray, solver: SolverConfig, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    z = z[np.isfinite(z)]
    z = z[np.abs(z) <= radius * (1.0 + 1e-9)]
    residual = np.abs(evaluate(F, z))
    keep = residual <= solver.residual_tol * _evaluation_scale(F, z)
    return z[keep], residual[keep]


def deduplicate(z: np.ndarray, residual: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Greedy clustering at distance tol; the smallest residual represents each cluster."""
    order = np.lexsort((z.imag, z.real, residual))
    kept_z: List[complex] = []
    kept_res: List[float] = []
    for i in order:
        if kept_z and np.min(np.abs(np.asarray(kept_z) - z[i])) < tol:
            continue
        kept_z.append(z[i])
        kept_res.append(residual[i])
    return np.asarray(kept_z, dtype=np.complex128), np.asarray(kept_res)


def _classify(
    F: HarmonicPolynomial,
    z: np.ndarray,
    residual: np.ndarray,
    solver: SolverConfig,
    winding: int,
    starts: int,
    densified: bool,
) -> ZeroCountResult:
    if z.size == 0:
        raise SolverError("all starting points diverged")
    jac = jacobian(F, z)
    singular = np.abs(jac) < solver.singular_tol * _derivative_scale(F, z) ** 2
    if singular.any():
        where = z[np.argmax(singular)]
        raise SolverError(f"singular zero near {where.real:.6g}{where.imag:+.6g}j")
    order = np.lexsort((z.imag, z.real))
    zeros = [
        ZeroRecord(
            z=complex(z[i]),
            jac=float(jac[i]),
            orientation=Orientation.PRESERVING if jac[i] > 0 else Orientation.REVERSING,
            residual=float(residual[i]),
        )
        for i in order
    ]
    n_plus = int(np.sum(jac > 0))
    n_minus = len(zeros) - n_plus
    n = F.n
    certified = (n_plus - n_minus == winding) and n <= len(zeros) <= n * n
    return ZeroCountResult(
        zeros=zeros,
        n_plus=n_plus,
        n_minus=n_minus,
        winding=winding,
        certified=certified,
        starts=starts,
        densified=densified,
    )


def find_zeros(F: HarmonicPolynomial, solver: SolverConfig = SolverConfig()) -> ZeroCountResult:
    """All zeros of F inside the root-radius disk, each with its Jacobian and orientation.

    An uncertified first pass is retried once on a grid with twice the points (when
    solver.densify is set); the merged zero set is reported either way.
    """
    if F.n > solver.max_degree:
        raise SolverError(f"degree {F.n} exceeds the solver cap {solver.max_degree}")
    winding = dominant_sign(F) * F.n
    radius = root_radius_bound(F)
    tol = solver.dedup_tol * radius
    count = (solver.start_factor * F.n) ** 2

    z, residual = _accepted(F, newton_polish(F, spherical_starts(count, radius), solver, radius), solver, radius)
    z, residual = deduplicate(z, residual, tol)
    if not solver.densify:
        return _classify(F, z, residual, solver, winding, count, False)
    result = _classify(F, z, residual, solver, winding, count, False) if z.size else None
    if result is not None and result.certified:
        return result

    logger.warning(
        "stream %s: %s after %d starts, densifying",
        F.stream,
        "no zeros" if result is None else f"N+={result.n_plus} N-={result.n_minus} winding={winding}",
        count,
    )
    extra_z, extra_res = _accepted(F, newton_polish(F, spherical_starts(2 * count, radius), solver, radius), solver, radius)
    z, residual = deduplicate(np.concatenate([z, extra_z]), np.concatenate([residual, extra_res]), tol)
    return _classify(F, z, residual, solver, winding, 3 * count, True)


def winding_number(F: HarmonicPolynomial, radius: float) -> int:
    """Winding of F around |z| = radius, sampled until consecutive arguments differ by < pi/2."""
    bound = root_radius_bound(F)
    if not radius > bound:
        raise RadiusError(f"radius {radius} does not exceed the root radius bound {bound}")
    count = max(64, 8 * F.n)
    while True:
        circle = radius * np.exp(2j * np.pi * np.arange(count) / count)
        values = evaluate(F, circle)
        steps = np.angle(np.roll(values, -1) / values)
        if np.max(np.abs(steps)) < np.pi / 2:
            return int(round(float(np.sum(steps)) / (2 * np.pi)))
        if count >= MAX_WINDING_SAMPLES:
            raise SolverError(f"argument still jumps by >= pi/2 with {count} samples")
        count *= 2


def _run_trial(job: Tuple[EnsembleSpec, int, SolverConfig]) -> TrialOutcome:
    spec, stream, solver = job
    try:
        F = sample(spec, stream)
    except HarmonicZerosError as exc:
        return TrialOutcome(stream=stream, error=str(exc))
    try:
        return TrialOutcome(stream=stream, attempt=F.attempt, result=find_zeros(F, solver))
    except HarmonicZerosError as exc:
        return TrialOutcome(stream=stream, attempt=F.attempt, error=str(exc))


def run_trials(
    spec: EnsembleSpec,
    trials: int,
    solver: SolverConfig = SolverConfig(),
    workers: int = 1,
    progress: bool = False,
) -> List[TrialOutcome]:
    """find_zeros on streams 0..trials-1; results come back in stream order whatever `workers` is."""
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if spec.n > solver.max_degree:
        raise SolverError(f"degree {spec.n} exceeds the solver cap {solver.max_degree}")
    jobs = [(spec, stream, solver) for stream in range(trials)]
    desc = f"n={spec.n} m={spec.m}"
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunksize = max(1, trials // (8 * workers))
            return list(tqdm(pool.map(_run_trial, jobs, chunksize=chunksize), total=trials, desc=desc, disable=not progress))
    return [_run_trial(job) for job in tqdm(jobs, desc=desc, disable=not progress)]


def summarize(spec: EnsembleSpec, outcomes: Sequence[TrialOutcome]) -> SampleStatistics:
    """Moments over certified trials only; the rest count as failures."""
    certified = [o.result for o in outcomes if o.certified]
    failures = len(outcomes) - len(certified)
    for outcome in outcomes:
        if outcome.error:
            logger.warning("stream %d rejected: %s", outcome.stream, outcome.error)
        elif not outcome.certified:
            logger.warning("stream %d uncertified", outcome.stream)

    totals = np.array([r.total for r in certified], dtype=np.float64)
    plus = np.array([r.n_plus for r in certified], dtype=np.float64)
    minus = np.array([r.n_minus for r in certified], dtype=np.float64)
    k = totals.size
    mean = float(np.mean(totals)) if k else math.nan
    variance = float(np.var(totals, ddof=1)) if k > 1 else 0.0
    stderr = math.sqrt(variance / k) if k else math.nan
    counts, freqs = np.unique(totals.astype(np.int64), return_counts=True)

    valid = failures <= INVALID_FAILURE_SHARE * len(outcomes) and k > 0
    notes = [CERTIFICATE_NOTE]
    if not valid:
        notes.append(f"{failures} of {len(outcomes)} trials uncertified (limit {INVALID_FAILURE_SHARE:.0%})")
    return SampleStatistics(
        spec=spec,
        trials=len(outcomes),
        certified_trials=k,
        histogram={int(c): int(f) for c, f in zip(counts, freqs)},
        mean=mean,
        variance=variance,
        stderr=stderr,
        mean_plus=float(np.mean(plus)) if k else math.nan,
        mean_minus=float(np.mean(minus)) if k else math.nan,
        failures=failures,
        resamples=sum(o.attempt for o in outcomes),
        valid=valid,
        notes=notes,
    )


def montecarlo_experiment(
    spec: EnsembleSpec,
    trials: int,
    solver: SolverConfig = SolverConfig(),
    workers: int = 1,
    progress: bool = False,
) -> SampleStatistics:
    stats = summarize(spec, run_trials(spec, trials, solver, workers, progress))
    logger.info(
        "n=%d m=%d: mean %.6g +/- %.2g over %d certified of %d trials",
        spec.n, spec.m, stats.mean, stats.stderr, stats.certified_trials, stats.trials,
    )
    return stats


def zero_rows(outcomes: Sequence[TrialOutcome]) -> List[list]:
    """[trial, re, im, jac, orientation] for every zero of every trial that produced a zero set."""
    rows = []
    for outcome in outcomes:
        if outcome.result is None:
            continue
        for record in outcome.result.zeros:
            rows.append([outcome.stream, record.z.real, record.z.imag, record.jac, record.orientation.value])
    return rows
