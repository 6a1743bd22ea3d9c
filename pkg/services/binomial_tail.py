"""Truncated binomial ratio q_{m,n}(x) = P_{m,n}(x) / (1+x)^n.

P_{m,n}(x) is the binomial expansion of (1+x)^n cut at degree m, so q_{m,n}(x) is the
probability that a Binomial(n, x/(1+x)) variable is at most m. It is evaluated through the
regularized incomplete beta function, which stays accurate far beyond the point where the
plain sum overflows.
"""
import math

import mpmath
import numpy as np
from scipy import integrate, special

from constants import EXACT_MAX_DIGITS, EXACT_MAX_N
from utils.errors import DomainError


def _check_x(x):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("x must be finite and nonnegative")
    return x


def _unwrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


def tail_ratio(m: int, n: int, x):
    """q_{m,n}(x) = I_{1/(1+x)}(n-m, m+1). Scalar or array x.

    m < 0 gives 0 (empty sum), m >= n gives 1, x = 0 gives 1 for m >= 0.
    """
    xs = _check_x(x)
    if m < 0:
        return _unwrap(np.zeros_like(xs), x)
    if m >= n:
        return _unwrap(np.ones_like(xs), x)
    with np.errstate(divide="ignore"):
        value = special.betainc(n - m, m + 1, 1.0 / (1.0 + xs))
    value = np.where(xs == 0, 1.0, value)
    return _unwrap(value, x)


def tail_ratio_complement(m: int, n: int, x):
    """1 - q_{m,n}(x) without cancellation: P(Binomial(n, x/(1+x)) > m)."""
    xs = _check_x(x)
    if m < 0:
        return _unwrap(np.ones_like(xs), x)
    if m >= n:
        return _unwrap(np.zeros_like(xs), x)
    value = special.betainc(m + 1, n - m, xs / (1.0 + xs))
    return _unwrap(value, x)


def tail_ratio_exact(m: int, n: int, x, digits: int = 50) -> mpmath.mpf:
    """Direct summation of sum_{k<=m} binom(n,k) x^k / (1+x)^n at `digits` decimal digits."""
    if n < 0 or n > EXACT_MAX_N:
        raise DomainError(f"tail_ratio_exact supports 0 <= n <= {EXACT_MAX_N}, got {n}")
    if digits < 1 or digits > EXACT_MAX_DIGITS:
        raise DomainError(f"digits must lie in [1, {EXACT_MAX_DIGITS}]")
    if isinstance(x, float) and (not math.isfinite(x) or x < 0):
        raise DomainError("x must be finite and nonnegative")
    with mpmath.workdps(digits):
        xm = mpmath.mpf(x)
        if xm < 0:
            raise DomainError("x must be nonnegative")
        if m < 0:
            return mpmath.mpf(0)
        if m >= n:
            return mpmath.mpf(1)
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        for k in range(m):
            term = term * (n - k) / (k + 1) * xm
            total += term
        return +(total / (1 + xm) ** n)


def log_binomial(n: int, k: int) -> float:
    """log binom(n, k) through log-gamma."""
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"log_binomial needs 0 <= k <= n, got n={n}, k={k}")
    if k == 0 or k == n:
        return 0.0
    return float(special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1))


def identity_gap(m: int, n: int, x: float) -> float:
    """q_{m,n}(x) - q_{m-1,n-1}(x), taken from whichever tail is small so nothing cancels."""
    if tail_ratio(m, n, x) <= 0.5:
        return tail_ratio(m, n, x) - tail_ratio(m - 1, n - 1, x)
    return tail_ratio_complement(m - 1, n - 1, x) - tail_ratio_complement(m, n, x)


def identity_rhs(m: int, n: int, x: float) -> float:
    """binom(n-1, m) x^m / (1+x)^n, the closed form of identity_gap."""
    if x == 0:
        return 1.0 if m == 0 else 0.0
    return math.exp(log_binomial(n - 1, m) + m * math.log(x) - n * math.log1p(x))


def tail_ratio_integral(m: int, n: int, x: float) -> float:
    """binom(n,m) (n-m) * int_{x/(1+x)}^1 u^m (1-u)^(n-m-1) du, valid for 0 < m < n-1."""
    if not 0 < m < n - 1:
        raise DomainError("integral form needs 0 < m < n-1")
    _check_x(x)
    log_scale = log_binomial(n, m) + math.log(n - m)
    # integrand is scaled by its maximum on the interval to stay in range
    lower = x / (1.0 + x)
    peak = min(max(m / (n - 1.0), lower), 1.0)
    log_peak = m * math.log(peak) + (n - m - 1) * math.log1p(-peak) if 0 < peak < 1 else 0.0

    def integrand(u):
        if u <= 0 or u >= 1:
            return 0.0
        return math.exp(m * math.log(u) + (n - m - 1) * math.log1p(-u) - log_peak)

    points = [peak] if lower < peak < 1 else None
    value, _ = integrate.quad(integrand, lower, 1.0, points=points, epsabs=0, epsrel=1e-12, limit=400)
    return math.exp(log_scale + log_peak) * value
