"""Estimators and goodness-of-fit machinery.

All checks use fixed analytic thresholds (Dvoretzky-Kiefer-Wolfowitz,
Wilson, chi-square quantiles) so reports are reproducible; nothing here
draws random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import chdtri

from .model import EULER_GAMMA, GUMBEL_VARIANCE, gumbel_cdf


@dataclass(frozen=True)
class TestReport:
    name: str
    value: float
    threshold: float
    passed: bool = field(init=False)
    sample_size: int = 0
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "passed", self.value <= self.threshold)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        out = (f"[{verdict}] {self.name}: value={self.value:.6g} "
               f"threshold={self.threshold:.6g} (R={self.sample_size})")
        if self.notes:
            out += f" {self.notes}"
        return out


def ks_distance(samples, cdf) -> float:
    """Sup distance between the ECDF of sorted `samples` and `cdf`,
    checking both one-sided gaps at every sample point.

    Sorting is the caller's responsibility.
    """
    samples = np.asarray(samples, dtype=np.float64)
    r = len(samples)
    if r == 0:
        raise ValueError("ks_distance requires a nonempty sample")
    values = np.array([cdf(x) for x in samples])
    grid = np.arange(1, r + 1) / r
    return float(max((grid - values).max(), (values - (grid - 1.0 / r)).max()))


def ks_two_sample(a, b) -> float:
    """Sup distance between the ECDFs of two samples."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("ks_two_sample requires nonempty samples")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / len(a)
    fb = np.searchsorted(b, pooled, side="right") / len(b)
    return float(np.abs(fa - fb).max())


def dkw_threshold(r: int, alpha: float = 0.01) -> float:
    """One-sample KS bound sqrt(ln(2/alpha) / (2r))."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * r))


def ks_two_sample_threshold(r_a: int, r_b: int, alpha: float = 0.01) -> float:
    """Two-sample analogue sqrt(ln(2/alpha)/2) * sqrt(1/r_a + 1/r_b)."""
    return math.sqrt(math.log(2.0 / alpha) / 2.0) * math.sqrt(1.0 / r_a + 1.0 / r_b)


def gumbel_report(
    normalized_samples,
    ks_threshold: float,
    mean_tolerance: float,
    variance_tolerance: float | None = None,
) -> list[TestReport]:
    """Compare normalized samples against the standard Gumbel law.

    Bundle: KS distance to exp(-e^{-x}); |mean - Euler-Mascheroni|;
    optionally |variance - pi^2/6|.
    """
    samples = np.sort(np.asarray(normalized_samples, dtype=np.float64))
    r = len(samples)
    reports = [
        TestReport(
            name="gumbel_ks",
            value=ks_distance(samples, gumbel_cdf),
            threshold=ks_threshold,
            sample_size=r,
        ),
        TestReport(
            name="gumbel_mean",
            value=abs(float(samples.mean()) - EULER_GAMMA),
            threshold=mean_tolerance,
            sample_size=r,
            notes=f"mean={samples.mean():.4f} target={EULER_GAMMA:.4f}",
        ),
    ]
    if variance_tolerance is not None:
        var = float(samples.var(ddof=1))
        reports.append(
            TestReport(
                name="gumbel_variance",
                value=abs(var - GUMBEL_VARIANCE),
                threshold=variance_tolerance,
                sample_size=r,
                notes=f"var={var:.4f} target={GUMBEL_VARIANCE:.4f}",
            )
        )
    return reports


def wilson_interval(hits: int, trials: int, z: float = 2.5758293035489004):
    """Wilson score interval for a binomial proportion (default 99%)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= hits <= trials:
        raise ValueError("hits must lie in [0, trials]")
    ph = hits / trials
    denom = 1.0 + z * z / trials
    center = (ph + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(ph * (1.0 - ph) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def ratio_with_ci(hits: int, trials: int, reference: float):
    """Empirical rate over `reference`, with a Wilson 99% interval scaled
    the same way.  Returns (ratio, (lo, hi))."""
    if reference <= 0.0:
        raise ValueError(f"reference must be positive, got {reference}")
    lo, hi = wilson_interval(hits, trials)
    return (hits / trials) / reference, (lo / reference, hi / reference)


def chi_square_report(
    counts,
    probabilities,
    name: str = "chi_square",
    significance: float = 1e-3,
    min_expected: float = 5.0,
) -> TestReport:
    """Pearson chi-square of observed counts against exact cell
    probabilities; bins with tiny expectation are pooled into neighbors."""
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probabilities, dtype=np.float64)
    total = counts.sum()
    expected = probs * total
    # pool left-to-right so every cell has enough mass
    obs_pool, exp_pool = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_pool.append(acc_o)
            exp_pool.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and exp_pool:
        obs_pool[-1] += acc_o
        exp_pool[-1] += acc_e
    obs = np.array(obs_pool)
    exp = np.array(exp_pool)
    if len(obs) < 2:
        raise ValueError("chi-square needs at least two pooled cells")
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = len(obs) - 1
    threshold = float(chdtri(dof, significance))
    return TestReport(
        name=name,
        value=stat,
        threshold=threshold,
        sample_size=int(total),
        notes=f"dof={dof}",
    )
