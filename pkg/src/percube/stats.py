"""Statistical utilities: KS distances, discrete TV, Poisson machinery,
and the sum-of-two-lognormals reference law.

Reference distributions are deliberately lightweight: a standard normal
(closed form), a Poisson pmf evaluated in the log domain, and the law of
exp(s*W1) + exp(s*W2) for independent standard normals with s = lam/sqrt(2),
whose CDF is an adaptive one-dimensional quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / SQRT2))


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov distances


def ks_statistic(samples: Sequence[float], cdf: Callable[[float], float]) -> float:
    """sup-norm distance between the empirical CDF and a reference CDF.

    Input need not be sorted; it is sorted internally.  Requires at least
    50 samples (fewer would make any fixed threshold meaningless).
    """
    s = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(s)
    if n < 50:
        raise ValueError("ks_statistic requires at least 50 samples")
    f = np.array([cdf(float(x)) for x in s])
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.abs(hi - f).max(), np.abs(f - lo).max()))


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> float:
    """sup-norm distance between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.abs(fa - fb).max())


# ---------------------------------------------------------------------------
# Discrete total variation


def tv_discrete(p: Sequence[float], q: Sequence[float]) -> float:
    """(1/2) sum |p_k - q_k| over integer support starting at 0.

    Arrays of different lengths are zero-padded, so mass on support the
    other pmf lacks is counted.  Negative masses are rejected.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if (p < 0).any() or (q < 0).any():
        raise ValueError("pmfs must be nonnegative")
    n = max(len(p), len(q))
    pp = np.zeros(n)
    qq = np.zeros(n)
    pp[: len(p)] = p
    qq[: len(q)] = q
    return float(0.5 * np.abs(pp - qq).sum())


# ---------------------------------------------------------------------------
# Sum of two i.i.d. lognormals


def lognormal_sum_cdf(x: float, lam: float = 1.0) -> float:
    """P(exp(s*W1) + exp(s*W2) <= x) with s = lam/sqrt(2), W i.i.d. N(0,1).

    Conditioning on W1 = w (possible only while exp(s*w) < x) gives a
    one-dimensional integral of phi(w) * Phi(log(x - exp(s*w)) / s) up to
    w = log(x)/s, evaluated with adaptive Gauss-Kronrod quadrature; the
    integrand vanishes continuously at the right endpoint.  Absolute
    accuracy target 1e-6 (the quadrature is asked for 1e-9).
    """
    if x <= 0.0:
        return 0.0
    s = lam / SQRT2
    w_max = math.log(x) / s

    def integrand(w: float) -> float:
        r = x - math.exp(s * w)
        if r <= 0.0:
            return 0.0
        return norm_pdf(w) * norm_cdf(math.log(r) / s)

    value, _ = integrate.quad(integrand, -np.inf, w_max, epsabs=1e-9, limit=200)
    return min(1.0, max(0.0, float(value)))


# ---------------------------------------------------------------------------
# Poisson pmf, tails, and total variation


def poisson_pmf(theta: float, k: int) -> float:
    """exp(k log(theta) - theta - log k!); exact in the log domain."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    if k < 0:
        return 0.0
    return math.exp(k * math.log(theta) - theta - math.lgamma(k + 1))


def poisson_truncation(theta: float) -> int:
    """Support cutoff theta + 20 sqrt(theta) + 50; past it the tail mass is
    far below every tolerance used here (the summed masses certify it)."""
    return math.ceil(theta + 20.0 * math.sqrt(theta) + 50.0)


def poisson_pmf_array(theta: float, k_max: int | None = None) -> np.ndarray:
    if k_max is None:
        k_max = poisson_truncation(theta)
    k = np.arange(k_max + 1, dtype=np.float64)
    from scipy.special import gammaln

    return np.exp(k * math.log(theta) - theta - gammaln(k + 1.0))


def _c_eta(eta: float) -> float:
    """Admissible deviation coefficient in the lower tail bound."""
    return 4.0 * eta / (1.0 + 6.0 * eta + 8.0 * eta * eta)


@dataclass(frozen=True)
class TailBound:
    value: float
    applicable: bool


def poisson_tail_bound(
    theta: float, t: float, side: str = "two-sided", eta: float = 1.0 / 6.0
) -> TailBound:
    """Chernoff-style bounds on P(|X - theta| > t sqrt(theta)), X ~ Poisson.

    upper:     exp(-t^2/2 + t^3 / (2 sqrt(theta))), any t > 0.
    lower:     exp(-(1/2 - eta) t^2 - (1/2 + eta) t^3 / sqrt(theta)),
               valid for t <= c_eta sqrt(theta) with
               c_eta = 4 eta / (1 + 6 eta + 8 eta^2).
    two-sided: 2 exp(-t^2/3), valid for t <= min(c_{1/6}, 1/3) sqrt(theta).

    Out-of-range (side, t) combinations return the expression with
    applicable=False rather than raising.
    """
    if theta <= 0 or t <= 0:
        raise ValueError("theta and t must be positive")
    rt = math.sqrt(theta)
    if side == "upper":
        return TailBound(math.exp(-t * t / 2.0 + t ** 3 / (2.0 * rt)), True)
    if side == "lower":
        ok = t <= _c_eta(eta) * rt
        return TailBound(
            math.exp(-(0.5 - eta) * t * t - (0.5 + eta) * t ** 3 / rt), ok
        )
    if side == "two-sided":
        ok = t <= min(_c_eta(1.0 / 6.0), 1.0 / 3.0) * rt
        return TailBound(2.0 * math.exp(-t * t / 3.0), ok)
    raise ValueError("side must be 'upper', 'lower', or 'two-sided'")


def poisson_tail_exact(theta: float, t: float, side: str = "two-sided") -> float:
    """Exact tail probability by pmf summation, for bound-domination tests."""
    k_max = poisson_truncation(theta)
    pmf = poisson_pmf_array(theta, k_max)
    k = np.arange(k_max + 1)
    rt = math.sqrt(theta)
    if side == "upper":
        return float(pmf[k > theta + t * rt].sum())
    if side == "lower":
        return float(pmf[k < theta - t * rt].sum())
    return float(pmf[np.abs(k - theta) > t * rt].sum())


def poisson_tv_exact(theta1: float, theta2: float) -> float:
    """Exact TV between two Poisson laws by truncated pmf summation.

    The truncation is self-certifying: each pmf's discarded mass is the
    complement of its summed mass, and the truncation error of the TV is
    at most their average, which is added to the result as an upper-bound
    correction (far below 1e-12 at the default cutoff).
    """
    if theta1 <= 0 or theta2 <= 0:
        raise ValueError("rates must be positive")
    k_max = max(poisson_truncation(theta1), poisson_truncation(theta2))
    p1 = poisson_pmf_array(theta1, k_max)
    p2 = poisson_pmf_array(theta2, k_max)
    core = 0.5 * np.abs(p1 - p2).sum()
    residual = 0.5 * ((1.0 - p1.sum()) + (1.0 - p2.sum()))
    return float(core + max(0.0, residual))


def poisson_tv_mean_bound(theta1: float, theta2: float) -> float:
    """|sqrt(theta1) - sqrt(theta2)|: the square-root-scale comparison,
    reported as a diagnostic (its universal prefactor is not pinned)."""
    return abs(math.sqrt(theta1) - math.sqrt(theta2))


# ---------------------------------------------------------------------------
# Reference distributions for goodness-of-fit overlays


@dataclass(frozen=True)
class StdNormal:
    def cdf(self, x: float) -> float:
        return norm_cdf(x)


@dataclass(frozen=True)
class LogNormalSum:
    lam: float = 1.0

    def cdf(self, x: float) -> float:
        return lognormal_sum_cdf(x, self.lam)


@dataclass(frozen=True)
class PoissonRef:
    theta: float

    def pmf(self, k: int) -> float:
        return poisson_pmf(self.theta, k)

    def pmf_array(self, k_max: int | None = None) -> np.ndarray:
        return poisson_pmf_array(self.theta, k_max)


def empirical_moment(samples: np.ndarray, k: int) -> tuple[float, float]:
    """Sample mean of x^k with its standard error."""
    x = np.asarray(samples, dtype=np.float64) ** k
    n = len(x)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n))
