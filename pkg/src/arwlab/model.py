"""Model parameters, normalization constants, and closed-form quantities.

Everything here is a pure function of its arguments; the rest of the
package builds on these definitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EULER_GAMMA = 0.5772156649015329
GUMBEL_VARIANCE = math.pi**2 / 6


@dataclass(frozen=True)
class Params:
    """Model parameters: n sites, sleep probability p, sink probability q.

    q = 0 is allowed only for fixed-energy dynamics (no dissipation);
    q = 1 sends every jump to the sink.
    """

    n: int
    p: float
    q: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if not (0.0 <= self.q <= 1.0):
            raise ValueError(f"q must lie in [0, 1], got {self.q}")

    @classmethod
    def from_lambda(cls, n: int, lam: float, q: float, seed: int = 0) -> "Params":
        return cls(n=n, p=derive_p(lam), q=q, seed=seed)


@dataclass(frozen=True)
class DerivedConstants:
    """Normalization constants derived from (n, p, q).

    r_n and f_n are None when undefined (q = 0, or r_n <= sqrt(n) for
    f_n); q_prime is None at q = 1.  Absent values are represented
    explicitly rather than as NaN.
    """

    n: int
    p: float
    q: float
    r_n: float | None
    sigma: float
    a_n: float
    f_n: float | None
    alpha_n: float
    q_prime: float | None


def derive_p(lam: float) -> float:
    """Sleep probability lam / (1 + lam) of a single instruction."""
    if lam <= 0:
        raise ValueError(f"sleep rate must be positive, got {lam}")
    return lam / (1.0 + lam)


def constants(params: Params) -> DerivedConstants:
    n, p, q = params.n, params.p, params.q
    sigma = math.sqrt(p * (1.0 - p))
    a_n = sigma * math.sqrt(n)
    alpha_n = math.sqrt(p * (1.0 - p) * n * math.log(n))
    if q > 0.0:
        r_n = 1.0 / q
        f_n = math.sqrt(2.0 * math.log(r_n / math.sqrt(n))) if r_n > math.sqrt(n) else None
    else:
        r_n = None
        f_n = None
    q_prime = n * q / (1.0 - q) if q < 1.0 else None
    return DerivedConstants(
        n=n, p=p, q=q, r_n=r_n, sigma=sigma, a_n=a_n, f_n=f_n,
        alpha_n=alpha_n, q_prime=q_prime,
    )


def mu(x: float) -> float:
    """Asymptotic cluster rate x * exp(-x^2/2) / sqrt(2*pi) of level-x
    exceedances; decreasing on [1, inf)."""
    return x * math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def gumbel_cdf(x: float) -> float:
    """exp(-e^{-x}); strictly increasing from 0 to 1."""
    return math.exp(-math.exp(-x))


def gumbel_quantile(u: float) -> float:
    """Inverse of gumbel_cdf on (0, 1)."""
    if not (0.0 < u < 1.0):
        raise ValueError(f"quantile argument must lie in (0, 1), got {u}")
    return -math.log(-math.log(u))


def normalize_S(S: float, consts: DerivedConstants) -> float:
    """Centered-and-scaled sleeping count f_n*((S - pn)/a_n - f_n) - log(sigma/sqrt(2*pi)).

    In the regime sqrt(n) << r_n = exp(o(n^(1/3))) this converges in law
    to the Gumbel distribution.
    """
    if consts.f_n is None:
        raise ValueError("f_n is undefined for these parameters (need r_n > sqrt(n))")
    s = (S - consts.p * consts.n) / consts.a_n
    return consts.f_n * (s - consts.f_n) - math.log(consts.sigma / math.sqrt(2.0 * math.pi))


def kl_bernoulli(a: float, p: float) -> float:
    """Bernoulli relative entropy a*ln(a/p) + (1-a)*ln((1-a)/(1-p))."""
    if not (0.0 < a < 1.0) or not (0.0 < p < 1.0):
        raise ValueError(f"kl_bernoulli requires arguments in (0, 1), got a={a}, p={p}")
    return a * math.log(a / p) + (1.0 - a) * math.log((1.0 - a) / (1.0 - p))
