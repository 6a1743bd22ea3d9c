"""Exact expected number of zeros for the truncated model and its radial density.

Every quantity is evaluated in the normalized form: the raw covariance terms grow like
(1+r^2)^(2n) and overflow around n = 500, while their ratios to that scale are the
truncated binomial ratios q of `services.binomial_tail`.
"""
import logging
import math
from typing import List, Tuple

import numpy as np
from scipy import integrate

from constants import RADICAND_CLAMP, RADICAND_FAIL, TailCutPolicy
from services.binomial_tail import tail_ratio
from services.polynomial import stream_generator
from utils.errors import DegreeError, DomainError, InconsistencyError, QuadratureError
from utils.schemas import FullTerms, MomentEstimate, QuadratureConfig, ReducedTerms

logger = logging.getLogger(__name__)


def _check_degrees(n: int, m: int) -> None:
    if n < 1 or not 0 <= m <= n:
        raise DegreeError(f"invalid degrees n={n}, m={m}")


def reduced_terms(r: float, n: int, m: int) -> ReducedTerms:
    if not math.isfinite(r) or r < 0:
        raise DomainError(f"radius must be finite and nonnegative, got {r}")
    _check_degrees(n, m)
    x = r * r
    x2 = x * x
    q_mn = tail_ratio(m, n, x)
    q_11 = tail_ratio(m - 1, n - 1, x)
    q_22 = tail_ratio(m - 2, n - 2, x) if n >= 2 else 0.0
    b3 = 1.0 + q_mn
    b12 = n * x2 * q_11
    # b3 (n x^2 + x) - n x^2, written without the cancellation at large r
    b1 = x + q_mn * (n * x2 + x)
    # (n-1) x^2 q_{m-2,n-2} + x (1+x) q_{m-1,n-1} equals n x^2 q_{m-2,n-2} + x q_{m-1,n-2}
    b2 = b3 * ((n - 1) * x2 * q_22 + x * (1.0 + x) * q_11) - n * x2 * q_11 * q_11
    return ReducedTerms(b1=b1, b2=b2, b12=b12, b3=b3, r=r, n=n, m=m)


def _moment_ratio(b1: float, b2: float, b12: float, b3: float) -> float:
    """(b1^2 + b2^2 - 2 b12^2) / (b3^2 sqrt((b1+b2)^2 - 4 b12^2)), 0 when the radicand vanishes."""
    scale = (b1 + b2) ** 2
    radicand = scale - 4.0 * b12 * b12
    if radicand < -RADICAND_FAIL * scale:
        raise InconsistencyError(f"negative radicand {radicand:.3e} (scale {scale:.3e})")
    if radicand <= RADICAND_CLAMP * scale:
        return 0.0
    return (b1 * b1 + b2 * b2 - 2.0 * b12 * b12) / (b3 * b3 * math.sqrt(radicand))


def radial_integrand(r: float, n: int, m: int) -> float:
    """Integrand of E N_F = 2 n^{3/2} int_0^inf (...) dr; zero at r = 0."""
    if r == 0:
        return 0.0
    t = reduced_terms(r, n, m)
    return _moment_ratio(t.b1, t.b2, t.b12, t.b3) / (math.sqrt(n) * r * (1.0 + r * r) ** 2)


def radial_integrand_full(r: float, n: int) -> float:
    """The m = n integrand, where every ratio q is 1: r sqrt(n r^2 + 1) / (2 sqrt(n) (1+r^2)^2)."""
    return r * math.sqrt(n * r * r + 1.0) / (2.0 * math.sqrt(n) * (1.0 + r * r) ** 2)


def claim_bound(r: float, n: int, m: int) -> Tuple[float, float]:
    """(ratio, bound) with ratio = b-moment ratio and bound = |b1 - b2| + sqrt(2 (b1 b2 - b12^2))."""
    t = reduced_terms(r, n, m)
    ratio = _moment_ratio(t.b1, t.b2, t.b12, t.b3)
    gram = max(t.b1 * t.b2 - t.b12 * t.b12, 0.0)
    return ratio, abs(t.b1 - t.b2) + math.sqrt(2.0 * gram)


def claim_bound_holds(r: float, n: int, m: int, slack: float = 1e-12) -> bool:
    ratio, bound = claim_bound(r, n, m)
    return ratio <= bound * (1.0 + slack) + slack


def critical_point_hint(n: int, m: int) -> float:
    """Radius where the density changes regime, sqrt(m / (n - m)); inf for m = n."""
    if m >= n:
        return math.inf
    return math.sqrt(m / (n - m)) if m > 0 else 0.0


def _quad(func, lower: float, upper: float, cfg: QuadratureConfig, points=None) -> float:
    result = integrate.quad(
        func,
        lower,
        upper,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions,
        points=points,
        full_output=1,
    )
    value, error = result[0], result[1]
    if len(result) > 3:
        message = result[3]
        # ier = 1: subdivision budget exhausted; other codes flag roundoff and are only logged
        if "maximum number of subdivisions" in message:
            raise QuadratureError(
                f"subdivision budget {cfg.max_subdivisions} exhausted on [{lower}, {upper}] "
                f"(estimate {value:.6g} +/- {error:.2g})"
            )
        logger.warning("quadrature on [%g, %g]: %s", lower, upper, message.strip().splitlines()[0])
    return value


def _radial_integral(n: int, m: int, r0: float, r1: float, cfg: QuadratureConfig) -> float:
    """int_{r0}^{r1} radial_integrand dr, r1 may be infinite."""
    if r1 <= r0:
        return 0.0
    knee = critical_point_hint(n, m)

    if cfg.tail_cut_policy == TailCutPolicy.EXPLICIT and math.isinf(r1):
        r_max = max(cfg.r_max, r0)
        head = _radial_integral(n, m, r0, r_max, cfg.model_copy(update={"tail_cut_policy": TailCutPolicy.TRANSFORM}))
        return head + _explicit_tail(n, m, r_max, cfg)

    # t = r / (1 + r) maps [0, inf] onto [0, 1]
    t0 = r0 / (1.0 + r0)
    t1 = 1.0 if math.isinf(r1) else r1 / (1.0 + r1)

    def integrand(t):
        if t >= 1.0:
            return 0.0
        r = t / (1.0 - t)
        return radial_integrand(r, n, m) / (1.0 - t) ** 2

    points = None
    if math.isfinite(knee) and r0 < knee < r1:
        points = [knee / (1.0 + knee)]
    return _quad(integrand, t0, t1, cfg, points=points)


def _explicit_tail(n: int, m: int, r_max: float, cfg: QuadratureConfig) -> float:
    # large-r limits: every q -> 0 for m < n (integrand ~ 1/(sqrt(n) r^3)), q == 1 for m = n
    if m == n:
        return _quad(lambda r: radial_integrand_full(r, n), r_max, math.inf, cfg)
    return 1.0 / (2.0 * math.sqrt(n) * r_max * r_max)


def expected_zero_count(n: int, m: int, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """E N_F for the truncated model."""
    _check_degrees(n, m)
    value = 2.0 * n ** 1.5 * _radial_integral(n, m, 0.0, math.inf, cfg)
    logger.debug("E N_F(n=%d, m=%d) = %.12g", n, m, value)
    return value


def expected_zero_count_annulus(n: int, m: int, r0: float, r1: float, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """Expected number of zeros with r0 <= |z| < r1."""
    _check_degrees(n, m)
    if r0 < 0 or r1 < r0 or math.isnan(r1):
        raise DomainError(f"need 0 <= r0 <= r1, got r0={r0}, r1={r1}")
    return 2.0 * n ** 1.5 * _radial_integral(n, m, r0, r1, cfg)


def expected_orientation_split(n: int, m: int, cfg: QuadratureConfig = QuadratureConfig()) -> Tuple[float, float]:
    """(E N_+, E N_-); N_+ - N_- = n almost surely for m < n."""
    if m >= n:
        raise DegreeError("the orientation split needs m < n")
    total = expected_zero_count(n, m, cfg)
    return 0.5 * (total + n), 0.5 * (total - n)


def kr_density(z: complex, n: int, m: int) -> float:
    """Expected zeros per unit area at z. Depends on |z| only."""
    r = abs(z)
    if r == 0:
        return 0.0
    return n ** 1.5 * radial_integrand(r, n, m) / (math.pi * r)


def density_profile(n: int, m: int, radii) -> List[Tuple[float, float]]:
    return [(float(r), kr_density(complex(r), n, m)) for r in radii]


def full_terms(z: complex, n: int, m: int) -> FullTerms:
    """Raw R-terms by direct summation; small n only (overflow beyond a few hundred)."""
    _check_degrees(n, m)
    x = abs(z) ** 2
    binom = [math.comb(n, k) for k in range(n + 1)]
    P_mn = sum(binom[k] * x ** k for k in range(m + 1))
    # sum_{k<=m} k binom(n,k) x^k and sum_{k<=m} k^2 binom(n,k) x^k
    s1_b = sum(k * binom[k] * x ** k for k in range(m + 1))
    s2_b = sum(k * k * binom[k] * x ** k for k in range(m + 1))
    s1_a = sum(k * binom[k] * x ** k for k in range(n + 1))
    s2_a = sum(k * k * binom[k] * x ** k for k in range(n + 1))
    R3 = (1.0 + x) ** n + P_mn
    R12 = s1_a * s1_b
    R1 = R3 * s2_a - s1_a * s1_a
    R2 = R3 * s2_b - s1_b * s1_b
    return FullTerms(R1=R1, R2=R2, R12=R12, R3=R3, z=complex(z))


def closed_form_moment(terms: FullTerms) -> float:
    """E|U1^2 - U2^2 + V1^2 - V2^2| = (R1^2 + R2^2 - 2 R12^2) / (R3 sqrt((R1+R2)^2 - 4 R12^2))."""
    scale = (terms.R1 + terms.R2) ** 2
    if scale == 0:
        return 0.0
    radicand = scale - 4.0 * terms.R12 ** 2
    if radicand < -RADICAND_FAIL * scale:
        raise InconsistencyError(f"negative radicand {radicand:.3e}")
    if radicand <= RADICAND_CLAMP * scale:
        return 0.0
    return (terms.R1 ** 2 + terms.R2 ** 2 - 2.0 * terms.R12 ** 2) / (terms.R3 * math.sqrt(radicand))


def conditional_covariance(z: complex, n: int, m: int) -> np.ndarray:
    """Covariance of (U1, U2, V1, V2) = (u1, u2, v1, v2) given u3 = v3 = 0.

    u1 + i v1 = z p'(z), u2 + i v2 = z q'(z), u3 + i v3 = F(z). The unconditional covariance
    is assembled from the coefficient variances and the regression R = C - B A^{-1} B^T
    conditions on F(z) = 0.
    """
    _check_degrees(n, m)
    x = abs(z) ** 2
    k_a = np.arange(n + 1)
    k_b = np.arange(m + 1)
    var_a = np.array([math.comb(n, k) for k in k_a], dtype=np.float64) * x ** k_a
    var_b = np.array([math.comb(n, k) for k in k_b], dtype=np.float64) * x ** k_b

    e_33 = 0.5 * (var_a.sum() + var_b.sum())
    e_13 = 0.5 * np.sum(k_a * var_a)
    e_11 = 0.5 * np.sum(k_a ** 2 * var_a)
    e_23 = 0.5 * np.sum(k_b * var_b)
    e_22 = 0.5 * np.sum(k_b ** 2 * var_b)

    # v3 carries -Im q, hence the sign on the (v2, v3) entry
    A = np.diag([e_33, e_33])
    B = np.array([
        [e_13, 0.0],
        [e_23, 0.0],
        [0.0, e_13],
        [0.0, -e_23],
    ])
    C = np.diag([e_11, e_22, e_11, e_22])
    return C - B @ np.linalg.solve(A, B.T)


def conditional_moment_oracle(
    z: complex,
    n: int,
    m: int,
    trials: int = 100_000,
    stream: int = 0,
    seed: int = 0,
) -> MomentEstimate:
    """Monte Carlo estimate of E|U1^2 - U2^2 + V1^2 - V2^2| next to its closed form."""
    if trials < 1000:
        raise DomainError("the moment oracle needs at least 1000 trials")
    R = conditional_covariance(z, n, m)
    eigenvalues, eigenvectors = np.linalg.eigh(R)
    floor = -1e-10 * max(float(np.max(np.abs(eigenvalues))), 1e-300)
    if eigenvalues.min() < floor:
        raise InconsistencyError(f"conditional covariance is not positive semidefinite (min eigenvalue {eigenvalues.min():.3e})")
    root = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    # oracle streams live apart from the coefficient streams
    rng = stream_generator(seed, stream, attempt=2**32 - 1)
    U1, U2, V1, V2 = (rng.standard_normal((trials, 4)) @ root.T).T
    values = np.abs(U1 ** 2 - U2 ** 2 + V1 ** 2 - V2 ** 2)
    return MomentEstimate(
        mean=float(values.mean()),
        stderr=float(values.std(ddof=1) / math.sqrt(trials)),
        closed_form=closed_form_moment(full_terms(z, n, m)),
        trials=trials,
    )
