import json
import logging
from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import special

from constants import EnsembleModel
from utils.errors import DegreeError, DomainError
from utils.schemas import EnsembleSpec, HarmonicPolynomial

logger = logging.getLogger(__name__)

MAX_RESAMPLES = 16


def stream_generator(seed: int, stream: int, attempt: int = 0) -> np.random.Generator:
    """Independent PCG64 generator addressed by (seed, stream, attempt)."""
    # spawn_key addresses an independent stream per (trial, attempt); order of use is irrelevant
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream, attempt))
    return np.random.Generator(np.random.PCG64(sequence))


def coefficient_log_variances(spec: EnsembleSpec) -> Tuple[np.ndarray, np.ndarray]:
    """log E|a_k|^2 and log E|b_k|^2 for the ensemble."""
    n, m = spec.n, spec.m
    log_var_a = special.gammaln(n + 1) - special.gammaln(np.arange(n + 1) + 1) - special.gammaln(n - np.arange(n + 1) + 1)
    deg_b = n if spec.model == EnsembleModel.TRUNCATED else m
    k = np.arange(m + 1)
    log_var_b = special.gammaln(deg_b + 1) - special.gammaln(k + 1) - special.gammaln(deg_b - k + 1)
    return log_var_a, log_var_b


def _standard_complex_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    # real and imaginary parts each of variance 1/2
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def sample(spec: EnsembleSpec, stream: int) -> HarmonicPolynomial:
    """Draw F from the ensemble; deterministic in (spec.seed, stream).

    Coefficients are standard complex normals scaled by exp(log binom / 2), which stays
    finite where the binomials themselves overflow. A draw with a_n == 0 is replaced by
    the next attempt of the same stream.
    """
    if stream < 0:
        raise DomainError("stream index must be nonnegative")
    if spec.n < 1 or not 0 <= spec.m <= spec.n:
        raise DegreeError(f"invalid degrees n={spec.n}, m={spec.m}")
    log_var_a, log_var_b = coefficient_log_variances(spec)
    for attempt in range(MAX_RESAMPLES):
        rng = stream_generator(spec.seed, stream, attempt)
        a = _standard_complex_normal(rng, spec.n + 1) * np.exp(0.5 * log_var_a)
        b = _standard_complex_normal(rng, spec.m + 1) * np.exp(0.5 * log_var_b)
        if a[-1] != 0:
            if attempt:
                logger.warning("stream %d resampled %d time(s) for a vanishing leading coefficient", stream, attempt)
            return HarmonicPolynomial(n=spec.n, m=spec.m, a=a, b=b, stream=stream, attempt=attempt)
    raise DomainError(f"stream {stream}: leading coefficient vanished {MAX_RESAMPLES} times")


def _check_point(z):
    z = np.asarray(z, dtype=np.complex128)
    if not np.all(np.isfinite(z)):
        raise DomainError("evaluation point must be finite")
    return z


def _unwrap(value, like):
    return complex(value) if np.ndim(like) == 0 else value


def evaluate(F: HarmonicPolynomial, z):
    """p(z) + conj(q(z)), Horner on both parts. Accepts a scalar or an array of points."""
    zs = _check_point(z)
    value = P.polyval(zs, F.a) + np.conj(P.polyval(zs, F.b))
    return _unwrap(value, z)


def derivatives(F: HarmonicPolynomial, z):
    """(p'(z), q'(z))."""
    zs = _check_point(z)
    p_prime = P.polyval(zs, P.polyder(F.a)) if F.n >= 1 else np.zeros_like(zs)
    q_prime = P.polyval(zs, P.polyder(F.b)) if F.m >= 1 else np.zeros_like(zs)
    return _unwrap(p_prime, z), _unwrap(q_prime, z)


def jacobian(F: HarmonicPolynomial, z):
    """J_F(z) = |p'(z)|^2 - |q'(z)|^2."""
    p_prime, q_prime = derivatives(F, z)
    value = np.abs(p_prime) ** 2 - np.abs(q_prime) ** 2
    return float(value) if np.ndim(z) == 0 else value


def dominant_sign(F: HarmonicPolynomial) -> int:
    """+1 when the z^n term of p dominates at infinity, -1 when conj(b_n z^n) does."""
    lead_a = abs(F.a[-1])
    if F.m < F.n:
        if lead_a == 0:
            raise DomainError("leading coefficient a_n vanishes")
        return 1
    lead_b = abs(F.b[-1])
    if lead_a == lead_b:
        raise DomainError("|a_n| == |b_n|: no dominant term at infinity")
    return 1 if lead_a > lead_b else -1


def root_radius_bound(F: HarmonicPolynomial) -> float:
    """R with F(z) != 0 for |z| > R (Cauchy-type bound on the dominant leading term).

    For m < n: R = 1 + (sum_{k<n} |a_k| + sum_{k<=m} |b_k|) / |a_n|. For m = n the leading
    coefficients compete and the margin ||a_n| - |b_n|| takes the place of |a_n|.
    """
    dominant_sign(F)
    lower_a = float(np.sum(np.abs(F.a[:-1])))
    if F.m < F.n:
        return 1.0 + (lower_a + float(np.sum(np.abs(F.b)))) / abs(F.a[-1])
    lower_b = float(np.sum(np.abs(F.b[:-1])))
    return 1.0 + (lower_a + lower_b) / abs(abs(F.a[-1]) - abs(F.b[-1]))


def _fujiwara_radius(margin: float, lower: np.ndarray) -> float:
    """2 max_k (lower_k / margin)^(1/(d-k)) for a degree-d majorant margin*x^d - sum lower_k x^k.

    Beyond this radius the leading term strictly beats the sum of the lower ones.
    """
    d = len(lower)
    if d == 0 or not np.any(lower):
        return 0.0
    k = np.arange(d)
    return 2.0 * float(np.max((lower / margin) ** (1.0 / (d - k))))


def _lower_magnitudes(first, second, degree: int) -> np.ndarray:
    # |coefficients| of both parts below the given degree, summed per power
    lower = np.zeros(degree)
    for coefficients in (first, second):
        part = np.abs(coefficients[:degree])
        lower[:len(part)] += part
    return lower


def fujiwara_root_radius(F: HarmonicPolynomial) -> float:
    """Fujiwara-type radius outside which F has no zeros; never larger than twice the tightest such bound."""
    dominant_sign(F)
    margin = abs(F.a[-1]) if F.m < F.n else abs(abs(F.a[-1]) - abs(F.b[-1]))
    return _fujiwara_radius(margin, _lower_magnitudes(F.a, F.b, F.n))


def derivative_radius_bound(F: HarmonicPolynomial) -> float:
    """R' with |p'(z)| != |q'(z)| for |z| > R', so the orientation-reversing set is bounded or co-bounded.

    Fujiwara-type bound on margin |z|^(n-1) - sum_k (|p'_k| + |q'_k|) |z|^k, where the margin is
    ||n a_n| - |n b_n|| for m = n and |n a_n| otherwise.
    """
    dp = P.polyder(F.a)
    dq = P.polyder(F.b) if F.m >= 1 else np.zeros(1, dtype=np.complex128)
    lead_p = abs(dp[-1])
    lead_q = abs(dq[-1]) if F.m == F.n else 0.0
    margin = abs(lead_p - lead_q)
    if margin == 0:
        raise DomainError("|a_n| == |b_n|: orientation-reversing set is unbounded in every direction")
    return _fujiwara_radius(margin, _lower_magnitudes(dp, dq, F.n - 1))


def dumps_polynomial(F: HarmonicPolynomial) -> str:
    """{"n", "m", "a": [[re, im], ...], "b": [...]}; repr-based floats round-trip exactly."""
    payload = {
        "n": F.n,
        "m": F.m,
        "a": [[float(c.real), float(c.imag)] for c in F.a],
        "b": [[float(c.real), float(c.imag)] for c in F.b],
    }
    return json.dumps(payload)


def loads_polynomial(text: str) -> HarmonicPolynomial:
    payload = json.loads(text)
    try:
        a = [complex(re, im) for re, im in payload["a"]]
        b = [complex(re, im) for re, im in payload["b"]]
        return HarmonicPolynomial(n=payload["n"], m=payload["m"], a=a, b=b)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed polynomial document: {exc}") from exc
