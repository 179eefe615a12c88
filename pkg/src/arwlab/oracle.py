"""Exact finite-n ground truth via linear solves on the count-chain state space.

These solvers are deliberately independent of the Monte Carlo engines:
they are the reference every sampler is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.linalg import solve_banded

MAX_EXACT_N = 12
MAX_FIXED_ENERGY_N = 2000


@dataclass(frozen=True)
class ExactPmf:
    """Probability mass function on {0, ..., n}."""

    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        m = self.mass
        if np.any(m < -1e-15):
            raise ValueError(f"negative mass below clamp tolerance: min={m.min()}")
        total = math.fsum(m.tolist())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"mass sums to {total}, not 1 within 1e-10")

    def mean(self) -> float:
        return float(np.dot(self.support, self.mass))

    def tv_distance(self, other_mass: np.ndarray) -> float:
        return 0.5 * float(np.abs(self.mass - np.asarray(other_mass)).sum())


def _binom_pmf_exact(n: int, p: float) -> np.ndarray:
    """Binomial(n, p) pmf with exact binomial coefficients (small n)."""
    return np.array(
        [math.comb(n, k) * p**k * (1.0 - p) ** (n - k) for k in range(n + 1)]
    )


def exact_final_pmf(n: int, p: float, q: float) -> ExactPmf:
    """Exact law of the count Y at the first step with Y = n - Z.

    The chain starts from Y(0) ~ Binomial(n, p), Z(0) = 0; a step is lazy
    with probability q (incrementing Z), otherwise a uniform coordinate is
    resampled Bernoulli(p).  States (y, z) with y + z < n are transient and
    absorption happens exactly on y + z = n, so the system is solved by a
    single backward sweep over z (elimination in lexicographic (z, y)
    order), one small dense solve per z row.
    """
    if not (1 <= n <= MAX_EXACT_N):
        raise ValueError(f"exact solver requires 1 <= n <= {MAX_EXACT_N}, got {n}")
    if not (0.0 < p <= 1.0):
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if not (0.0 < q <= 1.0):
        raise ValueError(f"q must lie in (0, 1]; the q = 0 chain need not absorb")

    # absorb[z][y] is the absorption law (length n+1) from transient (y, z).
    next_row: np.ndarray | None = None
    for z in range(n - 1, -1, -1):
        size = n - z  # transient y = 0 .. n-1-z
        top = size - 1
        A = np.zeros((size, size))
        B = np.zeros((size, n + 1))
        for y in range(size):
            up = (1.0 - q) * p * (n - y) / n
            down = (1.0 - q) * (1.0 - p) * y / n
            stay = 1.0 - q - up - down
            A[y, y] = 1.0 - stay
            if y > 0:
                A[y, y - 1] = -down
            if y < top:
                A[y, y + 1] = -up
            else:
                B[y, y + 1] += up  # up from the top element absorbs at S = n - z
            if y == top:
                B[y, y] += q  # lazy step lowers the boundary onto y
            else:
                B[y] += q * next_row[y]
        next_row = np.linalg.solve(A, B)

    start = _binom_pmf_exact(n, p)
    mass = np.empty(n + 1)
    for s in range(n + 1):
        terms = [start[y] * next_row[y, s] for y in range(n)]
        if s == n:
            terms.append(start[n])  # Y(0) = n is absorbed at step 0
        mass[s] = math.fsum(terms)
    mass[(mass < 0) & (mass >= -1e-15)] = 0.0
    return ExactPmf(support=np.arange(n + 1), mass=mass)


def exact_final_pmf_large(n: int, p: float, q: float) -> ExactPmf:
    """Same law as exact_final_pmf, solved by a forward sweep that scales
    to n in the thousands.

    Between sink arrivals the count performs a birth-death walk, so the
    expected visit counts per boundary row satisfy one tridiagonal system
    each; absorption mass is read off the upward flux out of the row's top
    state and the lazy flux that drops the boundary onto it.  O(n^2) total.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not (0.0 < p <= 1.0):
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if not (0.0 < q <= 1.0):
        raise ValueError("q must lie in (0, 1]; the q = 0 chain need not absorb")

    log_start = np.array(
        [
            math.lgamma(n + 1) - math.lgamma(y + 1) - math.lgamma(n - y + 1)
            + (y * math.log(p) if y else 0.0)
            + ((n - y) * math.log1p(-p) if y < n else 0.0)
            for y in range(n + 1)
        ]
    )
    start = np.exp(log_start)
    mass = np.zeros(n + 1)
    mass[n] += start[n]
    entering = start[:n].copy()
    for z in range(n):
        top = n - 1 - z  # transient y = 0..top within this boundary row
        y = np.arange(top + 1)
        up = (1.0 - q) * p * (n - y) / n
        down = (1.0 - q) * (1.0 - p) * y / n
        stay = (1.0 - q) - up - down
        # expected visits w solve w = entering + M w with M the within-row
        # flow (transpose of the hitting-system matrix)
        ab = np.zeros((3, top + 1))
        ab[1] = 1.0 - stay
        ab[0, 1:] = -down[1:]
        ab[2, :-1] = -up[:-1]
        visits = solve_banded((1, 1), ab, entering[: top + 1])
        mass[n - z] += up[top] * visits[top]
        mass[top] += q * visits[top]
        entering = q * visits[:top]
        if top == 0:
            break
    mass[(mass < 0) & (mass >= -1e-15)] = 0.0
    # the n near-singular row solves accumulate O(1e-10) mass drift at
    # small q; renormalize, refusing anything beyond rounding scale
    total = math.fsum(mass.tolist())
    if abs(total - 1.0) > 1e-8:
        raise ArithmeticError(f"forward sweep lost mass: total = {total}")
    mass /= total
    return ExactPmf(support=np.arange(n + 1), mass=mass)


def occupancy_pmf(n: int, m: int) -> np.ndarray:
    """Law of the number of occupied boxes after throwing m balls into n."""
    probs = np.zeros(min(m, n) + 1)
    probs[0] = 1.0
    for _ in range(m):
        k = np.arange(len(probs))
        stay = probs * k / n
        grow = np.zeros_like(probs)
        grow[1:] = probs[:-1] * (n - k[:-1]) / n
        probs = stay + grow
    return probs


def expected_occupied(n: int, m: int) -> float:
    """Closed-form mean n * (1 - (1 - 1/n)^m) of the occupied-box count."""
    return n * (1.0 - (1.0 - 1.0 / n) ** m)


def _first_passage_times(n: int, p: float, m: int) -> np.ndarray:
    """Expected steps for the no-sink count chain to first reach m from y < m.

    Tridiagonal system over y = 0..m-1: per step the chain moves up with
    probability p*(n-y)/n, down with probability (1-p)*y/n, else stays.
    """
    up = p * (n - np.arange(m)) / n
    down = (1.0 - p) * np.arange(m) / n
    ab = np.zeros((3, m))
    ab[1] = up + down  # diagonal of I - T
    ab[0, 1:] = -up[:-1]  # superdiagonal
    ab[2, :-1] = -down[1:]  # subdiagonal
    return solve_banded((1, 1), ab, np.ones(m))


def exact_fixed_energy_mean(n: int, p: float, m: int) -> float:
    """Expected number of steps for the no-sink chain to first reach m.

    The start Y(0) is the post-seeding law: throw m particles uniformly,
    topple every occupied site once so that surplus particles leave and
    the last one sleeps with probability p; hence Y(0) | (O occupied
    sites) ~ Binomial(O, p).  The first-passage system is tridiagonal.
    """
    if not (1 <= m <= n):
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if n > MAX_FIXED_ENERGY_N:
        raise ValueError(f"fixed-energy solver requires n <= {MAX_FIXED_ENERGY_N}, got {n}")
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")

    hit = np.zeros(m + 1)
    hit[:m] = _first_passage_times(n, p, m)
    occ = occupancy_pmf(n, m)
    total = 0.0
    for k, pk in enumerate(occ):
        if pk == 0.0 or k == 0:
            # k = 0 is impossible for m >= 1 but carries zero mass anyway.
            continue
        pmf_k = _binom_pmf_exact(k, p) if k <= 60 else _binom_pmf_float(k, p)
        total += pk * float(np.dot(pmf_k, hit[: k + 1]))
    return total


def _binom_pmf_float(k: int, p: float) -> np.ndarray:
    j = np.arange(k + 1)
    from scipy.stats import binom

    return binom.pmf(j, k, p)


_REANCHOR = 512  # refresh the term against high precision every this many terms


def _pmf_anchor(n: int, p: float, k: int) -> float:
    """Binomial(n, p) pmf at k, evaluated in extended precision."""
    with mpmath.workdps(40):
        lg = (
            mpmath.loggamma(n + 1)
            - mpmath.loggamma(k + 1)
            - mpmath.loggamma(n - k + 1)
            + k * mpmath.log(mpmath.mpf(p))
            + (n - k) * mpmath.log(1 - mpmath.mpf(p))
        )
        return float(mpmath.e**lg)


def binomial_tail(n: int, p: float, k: int) -> float:
    """P(Binomial(n, p) >= k), accurate to ~1e-12 relative for n <= 1e6.

    The dominated tail is summed in linear space as a ratio chain anchored
    on an extended-precision pmf value (re-anchored periodically so float
    rounding cannot accumulate), then complemented if the other tail was
    summed.  Terms are combined with exact (fsum) summation.
    """
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0

    if k > n * p:
        return _upper_sum(n, p, k)
    return 1.0 - _lower_sum(n, p, k - 1)


def _upper_sum(n: int, p: float, k: int) -> float:
    """Sum of pmf over k..n (k above the mean, so terms eventually decay)."""
    odds = p / (1.0 - p)
    terms = []
    term = 1.0
    anchor = _pmf_anchor(n, p, k)
    scale = [(0, anchor)]
    for j, i in enumerate(range(k, n + 1)):
        if j > 0:
            term *= (n - i + 1) / i * odds
        if j % _REANCHOR == 0 and j > 0:
            term = 1.0
            scale.append((j, _pmf_anchor(n, p, i)))
        terms.append(term * scale[-1][1])
        if terms[-1] < 1e-18 * anchor and (n - i + 1) / (i + 1) * odds < 0.9:
            break
    return math.fsum(terms)


def _lower_sum(n: int, p: float, k: int) -> float:
    """Sum of pmf over 0..k (k below the mean), summed downward from k."""
    odds = (1.0 - p) / p
    terms = []
    term = 1.0
    anchor = _pmf_anchor(n, p, k)
    scale = [(0, anchor)]
    for j, i in enumerate(range(k, -1, -1)):
        if j > 0:
            term *= (i + 1) / (n - i) * odds
        if j % _REANCHOR == 0 and j > 0:
            term = 1.0
            scale.append((j, _pmf_anchor(n, p, i)))
        terms.append(term * scale[-1][1])
        if terms[-1] < 1e-18 * anchor and i >= 1 and i / (n - i + 1) * odds < 0.9:
            break
    return math.fsum(terms)
