"""Defect weights, their parity-class sums, and closed-form constants.

A vertex v with k open incident edges carries the weight

    phi_v = lam * (1 + lam)^(-k)        (= 2^(-k) in the uniform case lam=1):

the cost, in the hard-core model at fugacity lam, of placing v as a defect
against a freely filled opposite side.  Phi_even / Phi_odd are the sums of
phi_v over the parity classes.  Their mean mu and variance sigma^2 have
closed forms; the fluctuation behavior of the scaled independent-set count
switches from Gaussian to a sum of two log-normals at the critical edge
density p_crit(lam) = (1+lam)^2 / (2*lam*(2+lam)), which is 2/3 at lam=1.

All exponentials of Phi are taken with centered exponents (Phi - mu); raw
exp(Phi) overflows already for moderate d.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .hypercube import DimensionError, Parity, PercolationInstance

SQRT2 = math.sqrt(2.0)
LAMBDA_MIN = SQRT2 - 1.0

PHI_SWEEP_MAX_DIM = 28


class FugacityError(ValueError):
    """Fugacity outside the range where the critical density exists in (0,1)."""


class Regime(Enum):
    SUPERCRITICAL = "supercritical"
    CRITICAL = "critical"


def critical_p(lam: float) -> float:
    """Critical edge density (1+lam)^2 / (2*lam*(2+lam)); 2/3 at lam=1.

    Lives in (0,1) only for lam > sqrt(2)-1; smaller fugacities are
    rejected (the would-be transition point reaches p=1 at the boundary).
    """
    if lam <= LAMBDA_MIN:
        raise FugacityError(
            f"lam={lam} <= sqrt(2)-1; no critical density below 1 exists"
        )
    return (1.0 + lam) ** 2 / (2.0 * lam * (2.0 + lam))


def mu_theory(d: int, p: float, lam: float = 1.0) -> float:
    """Mean of Phi for one parity class: (lam/2) * (2 - 2*lam*p/(1+lam))^d."""
    return 0.5 * lam * (2.0 - 2.0 * lam * p / (1.0 + lam)) ** d


def sigma_sq_theory(d: int, p: float, lam: float = 1.0) -> float:
    """Leading-order variance of Phi: (lam^2/2) * (2*(1 - p + p/(1+lam)^2))^d."""
    return 0.5 * lam * lam * (2.0 * (1.0 - p + p / (1.0 + lam) ** 2)) ** d


def moment_theory(d: int, p: float, lam: float, k: int) -> float:
    """E[phi_v^k] = lam^k * (1 - p + p/(1+lam)^k)^d for integer k >= 1."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return lam ** k * (1.0 - p + p / (1.0 + lam) ** k) ** d


def var_exact(d: int, p: float, lam: float = 1.0) -> float:
    """Exact finite-d variance of Phi: 2^(d-1) * (E[phi^2] - E[phi]^2).

    sigma_sq_theory is its leading order; the relative gap
    (E[phi]^2 / E[phi^2])^d vanishes as d grows but is substantial at
    desk-scale d, so tests that compare against simulation use this form.
    """
    m1 = moment_theory(d, p, lam, 1)
    m2 = moment_theory(d, p, lam, 2)
    return float(2 ** (d - 1)) * (m2 - m1 * m1)


def cov_theory(d: int, p: float, lam: float = 1.0) -> float:
    """Covariance of (Phi_even, Phi_odd): d * ((2-p)^2/2)^(d-1) * p(1-p)/4.

    Derived for the uniform model only; other fugacities are rejected.
    """
    if lam != 1.0:
        raise ValueError("cov_theory is available for lam=1 only")
    return d * ((2.0 - p) ** 2 / 2.0) ** (d - 1) * p * (1.0 - p) / 4.0


def zeta(regime: Regime, lam: float = 1.0) -> float:
    """Non-collision correction: 1 supercritical, exp(-lam^2/4) critical."""
    if regime is Regime.SUPERCRITICAL:
        return 1.0
    return math.exp(-lam * lam / 4.0)


@dataclass(frozen=True)
class ModelParams:
    """Model inputs (d, p, lam) plus the declared regime.

    The regime is explicit rather than inferred from float equality with
    the critical density: the non-collision correction is discontinuous
    there, so p == p_crit comparisons would be brittle.  Critical params
    must place p within 1e-12 of p_crit(lam); supercritical ones strictly
    above it.
    """

    d: int
    p: float
    lam: float = 1.0
    regime: Regime = Regime.SUPERCRITICAL

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        pc = critical_p(self.lam)
        if self.regime is Regime.CRITICAL:
            if abs(self.p - pc) >= 1e-12:
                raise ValueError(
                    f"critical regime requires p = p_crit({self.lam}) = {pc}, got {self.p}"
                )
        elif self.p <= pc:
            raise ValueError(
                f"supercritical regime requires p > p_crit({self.lam}) = {pc}, got {self.p}"
            )


@dataclass(frozen=True)
class TheoryConstants:
    """Closed-form constants for one (d, p, lam, regime) tuple."""

    d: int
    p: float
    lam: float
    regime: Regime
    mu: float
    sigma_sq: float
    zeta: float
    p_crit: float
    window_lo: int
    window_hi: int
    cov: Optional[float]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["regime"] = self.regime.value
        return out


def window_bounds(mu: float, exponent: float = 0.6) -> tuple[int, int]:
    """Integer window [ceil(mu - mu^e), floor(mu + mu^e)] of defect sizes.

    The default exponent 0.6 (anything slightly above 0.5 works) keeps the
    window just wider than the Poisson fluctuation scale sqrt(mu).
    """
    half = mu ** exponent
    return math.ceil(mu - half), math.floor(mu + half)


def theory_constants(params: ModelParams, window_exponent: float = 0.6) -> TheoryConstants:
    mu = mu_theory(params.d, params.p, params.lam)
    lo, hi = window_bounds(mu, window_exponent)
    return TheoryConstants(
        d=params.d,
        p=params.p,
        lam=params.lam,
        regime=params.regime,
        mu=mu,
        sigma_sq=sigma_sq_theory(params.d, params.p, params.lam),
        zeta=zeta(params.regime, params.lam),
        p_crit=critical_p(params.lam),
        window_lo=lo,
        window_hi=hi,
        cov=cov_theory(params.d, params.p) if params.lam == 1.0 else None,
    )


@dataclass(frozen=True)
class PhiPair:
    phi_even: float
    phi_odd: float


def degree_weights(d: int, lam: float) -> np.ndarray:
    """phi as a function of open degree: lam * (1+lam)^(-k) for k = 0..d."""
    return lam * (1.0 + lam) ** (-np.arange(d + 1, dtype=np.float64))


def vertex_weight(inst: PercolationInstance, v: int, lam: float = 1.0) -> float:
    """phi_v = lam * (1+lam)^(-open_degree(v))."""
    from .hypercube import open_degree

    if lam <= 0:
        raise ValueError("lam must be positive")
    return lam * (1.0 + lam) ** (-open_degree(inst, v))


def weight_power_sum(inst: PercolationInstance, parity: Parity, lam: float, k: int = 1) -> float:
    """Sum of phi_v^k over one parity class, exactly rounded.

    phi_v depends on v only through its open degree, so the 2^(d-1)-term
    sum regroups into at most d+1 products count * weight^k; math.fsum then
    rounds the total once.  This is the compensated-summation contract:
    the additive error stays at one ulp, far below the exponentially small
    fluctuation scale of Phi.
    """
    hist = inst.degree_histogram(parity)
    w = degree_weights(inst.d, lam) ** k
    return math.fsum(float(c) * float(x) for c, x in zip(hist, w) if c)


def phi_sums(inst: PercolationInstance, lam: float = 1.0) -> PhiPair:
    """Phi_even and Phi_odd for the instance."""
    if inst.d > PHI_SWEEP_MAX_DIM:
        raise DimensionError(f"full vertex sweep limited to d <= {PHI_SWEEP_MAX_DIM}")
    if lam <= 0:
        raise ValueError("lam must be positive")
    return PhiPair(
        phi_even=weight_power_sum(inst, Parity.EVEN, lam),
        phi_odd=weight_power_sum(inst, Parity.ODD, lam),
    )


def clt_statistic(phis: PhiPair, consts: TheoryConstants) -> float:
    """Normalized fluctuation of the two-sided exponential sum.

    (exp(Phi_even - mu) + exp(Phi_odd - mu) - 2) / (sqrt(2) * sigma);
    standard normal in the supercritical limit.  expm1 keeps precision
    when the centered exponents are tiny.
    """
    if consts.regime is not Regime.SUPERCRITICAL:
        raise ValueError("clt_statistic requires the supercritical regime")
    sigma = math.sqrt(consts.sigma_sq)
    a = phis.phi_even - consts.mu
    b = phis.phi_odd - consts.mu
    return (math.expm1(a) + math.expm1(b)) / (SQRT2 * sigma)


def critical_statistic(phis: PhiPair, consts: TheoryConstants) -> float:
    """exp(Phi_even - mu) + exp(Phi_odd - mu); converges to a sum of two
    i.i.d. log-normals exp(lam*W/sqrt(2)) at the critical density."""
    if consts.regime is not Regime.CRITICAL:
        raise ValueError("critical_statistic requires the critical regime")
    return math.exp(phis.phi_even - consts.mu) + math.exp(phis.phi_odd - consts.mu)
