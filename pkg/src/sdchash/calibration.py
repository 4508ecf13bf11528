"""Calibration distributions: Beta(alpha, beta) and the binomial bucket law.

The beta CDF is the regularized incomplete beta function, evaluated with a
modified-Lentz continued fraction. Quantiles are found by bisection followed
by safeguarded Newton steps.
"""

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if x <= 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the series in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (x + 0.5) * math.log(t) - t + math.log(acc)


def log_beta(a: float, b: float) -> float:
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def _check_shapes(a, b):
    if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"shape parameters must be positive and finite, got ({a}, {b})")


def _beta_cf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"continued fraction did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the CDF of Beta(a, b) at x."""
    _check_shapes(a, b)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    front = math.exp(log_front)
    # the fraction converges fast only below the mean; use the mirror above it
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def beta_pdf(a: float, b: float, x: float) -> float:
    _check_shapes(a, b)
    if x < 0.0 or x > 1.0:
        return 0.0
    if x == 0.0 or x == 1.0:
        edge_shape = a if x == 0.0 else b
        if edge_shape < 1.0:
            return math.inf
        if edge_shape > 1.0:
            return 0.0
        return math.exp(-log_beta(a, b))
    return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - log_beta(a, b))


@dataclass(frozen=True)
class BetaDistribution:
    alpha: float = 5.0
    beta: float = 5.0

    def __post_init__(self):
        _check_shapes(self.alpha, self.beta)

    def pdf(self, x: float) -> float:
        return beta_pdf(self.alpha, self.beta, x)

    def cdf(self, x: float) -> float:
        return regularized_incomplete_beta(self.alpha, self.beta, x)

    def icdf(self, z: float) -> float:
        return beta_icdf(self, z)


def beta_icdf(dist: BetaDistribution, z: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Quantile function of ``dist``.

    Bisection narrows the bracket to width 1e-3, then Newton steps using the
    PDF refine it until |CDF(x) - z| <= tol and the step has stalled in x.
    Any Newton step leaving the bracket is replaced by a bisection step.
    """
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"quantile must lie in [0, 1], got {z}")
    if z == 0.0:
        return 0.0
    if z == 1.0:
        return 1.0
    a, b = dist.alpha, dist.beta
    if a == b:
        # exact symmetry about the median
        if z == 0.5:
            return 0.5
        if z > 0.5:
            return 1.0 - beta_icdf(dist, 1.0 - z, tol, max_iter)
    lo, hi = 0.0, 1.0
    x = 0.5
    it = 0
    while hi - lo > 1e-3 and it < max_iter:
        x = 0.5 * (lo + hi)
        if regularized_incomplete_beta(a, b, x) < z:
            lo = x
        else:
            hi = x
        it += 1
    x = 0.5 * (lo + hi)
    while it < max_iter:
        err = regularized_incomplete_beta(a, b, x) - z
        if err == 0.0:
            return x
        if err < 0:
            lo = x
        else:
            hi = x
        density = beta_pdf(a, b, x)
        step = None
        if density > 0 and math.isfinite(density):
            candidate = x - err / density
            if lo < candidate < hi:
                step = candidate - x
                x = candidate
        if step is None:
            x = 0.5 * (lo + hi)
        elif abs(err) <= tol and abs(step) <= 1e-14 * x:
            return x
        if hi - lo <= 1e-15 * hi:
            return x
        it += 1
    return x


def icdf_to_similarity(u):
    """Map a value in [0, 1] affinely onto the cosine range [-1, 1]."""
    arr = np.asarray(u, dtype=np.float64)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise DomainError("icdf_to_similarity expects values in [0, 1]")
    out = 2.0 * arr - 1.0
    return float(out) if out.ndim == 0 else out


_target_lock = threading.Lock()


@lru_cache(maxsize=64)
def _targets_cached(n_pairs: int, alpha: float, beta: float) -> np.ndarray:
    dist = BetaDistribution(alpha, beta)
    quantiles = (2.0 * np.arange(1, n_pairs + 1) - 1.0) / (2.0 * n_pairs)
    out = np.array([beta_icdf(dist, float(z)) for z in quantiles])
    out = 2.0 * out - 1.0
    out.setflags(write=False)
    return out


def calibration_targets(n_pairs: int, dist: BetaDistribution) -> np.ndarray:
    """Similarity targets at the bin-centre quantiles (2i-1)/(2n), i = 1..n.

    The result is cached per (n, alpha, beta) and read-only.
    """
    if n_pairs < 1:
        raise DomainError("need at least one pair")
    with _target_lock:
        return _targets_cached(int(n_pairs), float(dist.alpha), float(dist.beta))


@dataclass(frozen=True)
class BinomialBucketDistribution:
    """Law of the Hamming distance between two uniform random K-bit codes."""

    k_bits: int

    def __post_init__(self):
        if self.k_bits < 1:
            raise DomainError("k_bits must be at least 1")

    def pmf(self, d: int) -> float:
        return binomial_bucket_pmf(self, d)

    def pmf_table(self) -> np.ndarray:
        return np.array([binomial_bucket_pmf(self, d) for d in range(self.k_bits + 1)])

    def cdf_table(self) -> np.ndarray:
        return np.cumsum(self.pmf_table())

    def icdf(self, z: float) -> int:
        return binomial_bucket_icdf(self, z)


def binomial_bucket_pmf(dist: BinomialBucketDistribution, d: int) -> float:
    k = dist.k_bits
    if not 0 <= d <= k:
        raise DomainError(f"distance {d} outside 0..{k}")
    # int / int true division is correctly rounded, so dyadic values are exact
    return math.comb(k, d) / 2**k


def binomial_bucket_icdf(dist: BinomialBucketDistribution, z: float) -> int:
    """Smallest d with CDF(d) >= z."""
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"quantile must lie in [0, 1], got {z}")
    k = dist.k_bits
    if z == 1.0:
        return k
    # exact integer counts avoid rounding drift in the cumulative sum
    total = 2**k
    running = 0
    for d in range(k + 1):
        running += math.comb(k, d)
        if running / total >= z:
            return d
    return k
