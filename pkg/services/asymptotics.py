import logging
import math
from typing import List, Sequence, Tuple

import mpmath
import numpy as np
from scipy import integrate

from constants import EnsembleModel, MeanRegime, Regime
from services.binomial_tail import log_binomial, tail_ratio_complement, tail_ratio_exact
from utils.errors import DegreeError, DomainError, PhaseBoundaryError
from utils.schemas import RegimeClassification

logger = logging.getLogger(__name__)

# relative distance from the phase boundary treated as "on" it
BOUNDARY_RTOL = 1e-12


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def critical_radius(alpha: float) -> float:
    """sqrt(alpha / (1 - alpha)): the density switches from n^{3/2} to n scaling here."""
    alpha = _check_alpha(alpha)
    return math.sqrt(alpha / (1.0 - alpha))


def c_alpha(alpha: float) -> float:
    """Leading constant of E N_F ~ c_alpha n^{3/2}."""
    alpha = _check_alpha(alpha)
    return 0.5 * (math.atan(math.sqrt(alpha / (1.0 - alpha))) - math.sqrt(alpha * (1.0 - alpha)))


def c_alpha_integral(alpha: float) -> float:
    """c_alpha as int_0^{r_c} r^2 / (1 + r^2)^2 dr, by quadrature."""
    upper = critical_radius(alpha)
    value, _ = integrate.quad(lambda r: r * r / (1.0 + r * r) ** 2, 0.0, upper, epsabs=1e-15, epsrel=1e-14, limit=200)
    return value


def predicted_mean(
    n: int,
    m: int,
    regime: MeanRegime = MeanRegime.PROPORTIONAL,
    model: EnsembleModel = EnsembleModel.TRUNCATED,
) -> float:
    """Leading-order E N_F.

    Truncated model: c_{m/n} n^{3/2} in the proportional regime, n with m fixed.
    Li-Wei model: pi/4 n^{3/2} when m = n, otherwise n.
    """
    if n < 1 or not 0 <= m <= n:
        raise DegreeError(f"invalid degrees n={n}, m={m}")
    if model == EnsembleModel.LI_WEI:
        return math.pi / 4.0 * n ** 1.5 if m == n else float(n)
    if regime == MeanRegime.FIXED_M:
        return float(n)
    alpha = m / n
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"proportional regime needs 0 < m/n < 1, got m={m}, n={n}")
    return c_alpha(alpha) * n ** 1.5


def density_asymptotic(z: complex, n: int, alpha: float) -> float:
    """Leading-order zero density at z: n^{3/2}|z|/(2 pi (1+|z|^2)^2) inside r_c, n/(pi (1+|z|^2)^2) outside."""
    if n < 1:
        raise DegreeError(f"n must be positive, got {n}")
    r = abs(complex(z))
    boundary = critical_radius(alpha)
    if math.isclose(r, boundary, rel_tol=BOUNDARY_RTOL):
        raise PhaseBoundaryError(f"|z| = {r} sits on the critical radius {boundary}")
    weight = (1.0 + r * r) ** 2
    if r < boundary:
        return n ** 1.5 * r / (2.0 * math.pi * weight)
    return n / (math.pi * weight)


def _h(u: float, alpha: float) -> float:
    return alpha * math.log(u) + (1.0 - alpha) * math.log1p(-u)


def classify_regime(x: float, alpha: float) -> RegimeClassification:
    """Like laplace_rate, but the phase boundary comes back as CRITICAL instead of raising."""
    alpha = _check_alpha(alpha)
    x = float(x)
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"x must be positive and finite, got {x}")
    theta = x / (1.0 + x)
    if math.isclose(x, alpha / (1.0 - alpha), rel_tol=BOUNDARY_RTOL):
        return RegimeClassification(regime=Regime.CRITICAL, x=x, alpha=alpha, rate=0.0)
    if theta < alpha:
        return RegimeClassification(regime=Regime.INSIDE, x=x, alpha=alpha, rate=0.0)
    rate = _h(alpha, alpha) - _h(theta, alpha)
    # h is maximised at alpha, so rate > 0 up to roundoff next to the boundary
    if rate <= 0:
        return RegimeClassification(regime=Regime.CRITICAL, x=x, alpha=alpha, rate=0.0)
    return RegimeClassification(regime=Regime.OUTSIDE, x=x, alpha=alpha, rate=rate)


def laplace_rate(x: float, alpha: float) -> RegimeClassification:
    """Regime of q_{alpha n, n}(x) and its exponential decay rate.

    With theta = x/(1+x) and h(u) = alpha log u + (1-alpha) log(1-u): inside (theta < alpha)
    the ratio tends to 1; outside it decays like exp(-c2 n)/sqrt(n) with c2 = h(alpha) - h(theta).
    """
    result = classify_regime(x, alpha)
    if result.regime == Regime.CRITICAL:
        raise PhaseBoundaryError(f"x = {x} sits on the phase boundary alpha/(1-alpha) for alpha = {alpha}")
    return result


def endpoint_laplace_approximation(m: int, n: int, x: float) -> float:
    """Leading endpoint term binom(n,m)(n-m) theta^{m+1} (1-theta)^{n-m} / (n (theta - alpha)).

    Only meaningful outside (theta > alpha = m/n); its ratio to tail_ratio tends to 1.
    """
    if not 0 < m < n:
        raise DegreeError(f"endpoint approximation needs 0 < m < n, got m={m}, n={n}")
    x = float(x)
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"x must be positive and finite, got {x}")
    theta = x / (1.0 + x)
    alpha = m / n
    if theta <= alpha:
        raise DomainError(f"theta = {theta:.6g} is not beyond alpha = {alpha:.6g}; no endpoint maximum")
    log_value = (
        log_binomial(n, m)
        + math.log(n - m)
        + (m + 1) * math.log(theta)
        + (n - m) * math.log1p(-theta)
        - math.log(n)
        - math.log(theta - alpha)
    )
    return math.exp(log_value)


def _round_m(alpha: float, n: int) -> int:
    return int(math.floor(alpha * n + 0.5))


def fit_decay_rate(alpha: float, x: float, ns: Sequence[int], digits: int = 50) -> Tuple[float, float]:
    """Least-squares (slope, intercept) of log tail_ratio_exact(round(alpha n), n, x) against n.

    The slope estimates -c2 in the outside regime; the -log(n)/2 prefactor biases it only slightly.
    """
    alpha = _check_alpha(alpha)
    if len(ns) < 2:
        raise DomainError("need at least two degrees to fit a slope")
    logs = []
    for n in ns:
        value = tail_ratio_exact(_round_m(alpha, n), n, x, digits=digits)
        if value <= 0:
            raise DomainError(f"tail ratio vanished at n={n}; raise digits")
        logs.append(float(mpmath.log(value)))
    slope, intercept = np.polyfit(np.asarray(ns, dtype=np.float64), np.asarray(logs), 1)
    logger.debug("decay fit alpha=%g x=%g: slope %.6g intercept %.6g", alpha, x, slope, intercept)
    return float(slope), float(intercept)


def inside_deviation(alpha: float, x: float, ns: Sequence[int]) -> List[float]:
    """n * |q_{round(alpha n), n}(x) - 1| for each n; stays bounded inside the critical radius."""
    alpha = _check_alpha(alpha)
    return [n * float(tail_ratio_complement(_round_m(alpha, n), n, x)) for n in ns]


def fit_leading_coefficient(ns: Sequence[int], values: Sequence[float]) -> Tuple[float, float]:
    """Least-squares (c, d) in E = c n^{3/2} + d n."""
    n = np.asarray(ns, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    if n.shape != y.shape or n.size < 2:
        raise DomainError("need matching sequences of at least two points")
    design = np.column_stack([n ** 1.5, n])
    (c, d), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(c), float(d)
