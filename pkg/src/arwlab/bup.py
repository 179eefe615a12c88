"""Count-chain engines in discrete and continuous time.

The chain tracks y (sleeping-site count) and z (sink arrivals): a step is
lazy with probability q and increments z, otherwise a uniform coordinate
of an n-bit vector is resampled Bernoulli(p).  The count alone is a
Markov chain (the uniform coordinate equals 1 with probability y/n), so
the default engines never materialize the vector; the full-state engine
does, for statistics that depend on coordinate identities.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import Params, constants
from .rng import as_seed, derive_seed, generator, substream


@dataclass
class BupState:
    y: int
    z: int
    t: float = 0

    def boundary(self, n: int) -> int:
        return n - self.z

    def absorbed(self, n: int) -> bool:
        return self.y == n - self.z


@dataclass(frozen=True)
class HittingResult:
    y: int
    steps: int
    z: int


@dataclass(frozen=True)
class FixedEnergyResult:
    steps: int
    cap_hit: bool
    site_updates: int
    y0: int
    occupied: int


@dataclass(frozen=True)
class PathStats:
    """Level statistics of one continuous-time run over [0, horizon]."""

    running_max: float  # max of (Y - pn)/a_n over the window
    occupation: float  # time with Y at or above the level threshold
    exceed_count: int  # entries into the level set (initial residence counts)
    window: tuple[float, float]
    level: float

    def __post_init__(self):
        length = self.window[1] - self.window[0]
        if self.occupation > length * (1 + 1e-12) + 1e-12:
            raise ValueError("occupation exceeds the window length")
        if self.occupation > 0 and self.running_max < self.level:
            raise ValueError("positive occupation requires the max to reach the level")


@dataclass(frozen=True)
class LevelMaxima:
    levels: list[float]
    maxima: list[float]  # -inf for an empty interval
    hit_step: int | None
    hit_y: int | None
    truncated: list[bool]


@dataclass(frozen=True)
class ConditionalMoments:
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    reps: int
    exact_mean: float
    exact_variance: float


@dataclass(frozen=True)
class OccupationEstimate:
    mean: float
    se: float
    reps: int


def step_discrete(state: BupState, params: Params, rng) -> BupState:
    """One step of the discrete chain (reference implementation)."""
    n, p, q = params.n, params.p, params.q
    if state.absorbed(n):
        raise RuntimeError("cannot step an absorbed chain")
    u = rng.random()
    y, z = state.y, state.z
    if u < q:
        z += 1
    else:
        u2 = (u - q) / (1.0 - q)
        down = y * (1.0 - p) / n
        up = (n - y) * p / n
        if u2 < down:
            y -= 1
        elif u2 < down + up:
            y += 1
    return BupState(y=y, z=z, t=state.t + 1)


def run_to_hitting(params: Params, rng=None) -> HittingResult:
    """Start at Binomial(n, p) and run until y = n - z; O(1) memory."""
    if params.q <= 0.0:
        raise ValueError("the boundary is hit almost surely only for q > 0")
    y, z, steps = _kernels.bup_hit(params.n, params.p, params.q, as_seed(rng))
    return HittingResult(y=int(y), steps=int(steps), z=int(z))


def sample_initial_fixed_energy(n: int, p: float, m: int, rng=None) -> tuple[int, int]:
    """Throw m particles uniformly and topple each occupied site once.

    Surplus particles leave their site (one jump each) and the last one
    sleeps with probability p, so the sleeping count is Binomial over the
    occupied sites and the jump tally is m minus it.  Returns
    (sleeping_count, initial_jumps).
    """
    if not (1 <= m <= n):
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    gen = generator(as_seed(rng))
    occupied = len(np.unique(gen.integers(0, n, size=m)))
    y0 = int(gen.binomial(occupied, p))
    return y0, m - y0


def run_fixed_energy(
    n: int, p: float, m: int, rng=None, step_cap: int = 10**9
) -> FixedEnergyResult:
    """No-sink dynamics from the seeded start until y = m or the cap.

    Hitting the cap is reported as a value, not an error.  The update
    count of a fixed site is Binomial(steps, 1/n): coordinate choices are
    i.i.d. uniform and independent of the count path given the step count.
    """
    if not (1 <= m <= n):
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    seed = as_seed(rng)
    y0, occupied, steps, hit = _kernels.bup_fixed_energy(
        n, p, m, step_cap, substream(seed, 0)
    )
    gen = generator(substream(seed, 1))
    site_updates = int(gen.binomial(int(steps), 1.0 / n))
    return FixedEnergyResult(
        steps=int(steps),
        cap_hit=not bool(hit),
        site_updates=site_updates,
        y0=int(y0),
        occupied=int(occupied),
    )


def lattice_ceiling(value: float) -> int:
    """Smallest integer >= value, robust to float noise at lattice points."""
    return math.ceil(value - 1e-9)


def level_threshold(n: int, p: float, x: float) -> int:
    """Integer count threshold for the normalized level x: the comparison
    (Y - pn)/a_n >= x is evaluated as Y >= ceil(pn + x * a_n)."""
    c = constants(Params(n=n, p=p, q=0.0))
    return lattice_ceiling(p * n + x * c.a_n)


def x_prime(x: float, n: int, p: float) -> float:
    """Smallest level >= x on which the normalized count is supported,
    i.e. with pn + x' * a_n an integer."""
    c = constants(Params(n=n, p=p, q=0.0))
    k = lattice_ceiling(p * n + x * c.a_n)
    if k > n:
        raise ValueError(f"level {x} exceeds the maximum supported value "
                         f"{(1.0 - p) * n / c.a_n}")
    return (k - p * n) / c.a_n


def _q_prime_or_raise(params: Params) -> float:
    q_prime = constants(params).q_prime
    if q_prime is None:
        raise ValueError("continuous dynamics are undefined at q = 1")
    return q_prime


def run_continuous(
    params: Params,
    horizon: float,
    level: float,
    start: str | int = "stationary",
    mode: str = "count",
    rng=None,
) -> PathStats:
    """Event-driven run over [0, horizon] collecting level statistics.

    Coordinates update at total rate n and the sink ticks independently at
    rate n*q/(1-q); occupation time above `level` is exact (holding time
    times indicator), not sampled on a grid.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    q_prime = _q_prime_or_raise(params)
    n, p = params.n, params.p
    threshold = level_threshold(n, p, level)
    stationary = start == "stationary"
    y_start = 0 if stationary else int(start)
    seed = as_seed(rng)
    if mode == "count":
        max_y, occ, entries, _yf, _ticks = _kernels.bup_continuous_count(
            n, p, q_prime, stationary, y_start, horizon, threshold, seed
        )
    elif mode == "full":
        max_y, occ, entries, _yf, _ticks, _regen, _distinct = (
            _kernels.bup_continuous_full(
                n, p, q_prime, stationary, y_start, horizon, threshold, seed
            )
        )
    else:
        raise ValueError(f"unknown engine mode {mode!r}")
    a_n = constants(params).a_n
    return PathStats(
        running_max=(max_y - p * n) / a_n,
        occupation=float(occ),
        exceed_count=int(entries),
        window=(0.0, horizon),
        level=level,
    )


def sample_count_at(
    params: Params,
    horizon: float,
    start: str | int = "stationary",
    mode: str = "count",
    rng=None,
) -> int:
    """Terminal count Y(horizon) of one continuous-time run."""
    q_prime = _q_prime_or_raise(params)
    n, p = params.n, params.p
    stationary = start == "stationary"
    y_start = 0 if stationary else int(start)
    seed = as_seed(rng)
    if mode == "count":
        out = _kernels.bup_continuous_count(
            n, p, q_prime, stationary, y_start, horizon, n + 1, seed
        )
        return int(out[3])
    if mode == "full":
        out = _kernels.bup_continuous_full(
            n, p, q_prime, stationary, y_start, horizon, n + 1, seed
        )
        return int(out[3])
    raise ValueError(f"unknown engine mode {mode!r}")


def regeneration_time(params: Params, rng=None, horizon: float | None = None) -> float | None:
    """First time every coordinate has updated at least once (full-state
    engine); None if not reached before the horizon."""
    q_prime = _q_prime_or_raise(params)
    n, p = params.n, params.p
    if horizon is None:
        horizon = 8.0 * math.log(max(n, 2)) + 16.0
    out = _kernels.bup_continuous_full(
        n, p, q_prime, True, 0, horizon, n + 1, as_seed(rng)
    )
    regen = float(out[5])
    return regen if regen >= 0 else None


def conditional_mean_exact(n: int, p: float, xp: float, t: float) -> float:
    """Mean of the count at time t started from pn + xp * a_n exactly."""
    a_n = math.sqrt(p * (1.0 - p) * n)
    return p * n + math.exp(-t) * xp * a_n


def conditional_variance_exact(n: int, p: float, xp: float, t: float) -> float:
    """Variance of the count at time t started from pn + xp * a_n exactly."""
    a_n = math.sqrt(p * (1.0 - p) * n)
    e = math.exp(-t)
    return (1.0 - e) * (p * n * (1.0 - p) * (e + 1.0) + xp * a_n * e * (1.0 - 2.0 * p))


def _parallel_reps(fn, reps: int, workers: int):
    if workers <= 1:
        return [fn(i) for i in range(reps)]
    results = [None] * reps
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i, value in enumerate(pool.map(fn, range(reps))):
            results[i] = value
    return results


def conditional_moments(
    n: int,
    p: float,
    x: float,
    t: float,
    reps: int,
    rng=None,
    workers: int = 1,
) -> ConditionalMoments:
    """Sample mean/variance of the count at time t from the exact lattice
    start at x' >= x, with standard errors and the exact targets."""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    xp = x_prime(x, n, p)
    a_n = math.sqrt(p * (1.0 - p) * n)
    y0 = round(p * n + xp * a_n)
    master = as_seed(rng)

    def one(i: int) -> int:
        out = _kernels.bup_continuous_count(
            n, p, 0.0, False, y0, t, n + 1, derive_seed(master, i)
        )
        return int(out[3])

    values = np.array(_parallel_reps(one, reps, workers), dtype=np.float64)
    mean = float(values.mean())
    var = float(values.var(ddof=1))
    se_mean = math.sqrt(var / reps)
    se_var = var * math.sqrt(2.0 / (reps - 1))
    return ConditionalMoments(
        mean=mean,
        variance=var,
        se_mean=se_mean,
        se_variance=se_var,
        reps=reps,
        exact_mean=conditional_mean_exact(n, p, xp, t),
        exact_variance=conditional_variance_exact(n, p, xp, t),
    )


def cluster_occupation(
    n: int,
    p: float,
    x: float,
    reps: int,
    rng=None,
    workers: int = 1,
) -> OccupationEstimate:
    """Mean time above level x over [0, log n] started on the lattice at
    x' >= x; for large n and sqrt(log n) << x << n^(1/6) this approaches
    1/x^2."""
    logn = math.log(n)
    if x < 0.8 * math.sqrt(logn) or x > 1.2 * n ** (1.0 / 6.0):
        warnings.warn(
            "cluster occupation is asymptotically 1/x^2 only for "
            "sqrt(log n) << x << n^(1/6)",
            stacklevel=2,
        )
    xp = x_prime(x, n, p)
    a_n = math.sqrt(p * (1.0 - p) * n)
    y0 = round(p * n + xp * a_n)
    threshold = level_threshold(n, p, x)
    master = as_seed(rng)

    def one(i: int) -> float:
        out = _kernels.bup_continuous_count(
            n, p, 0.0, False, y0, logn, threshold, derive_seed(master, i)
        )
        return float(out[1])

    values = np.array(_parallel_reps(one, reps, workers), dtype=np.float64)
    return OccupationEstimate(
        mean=float(values.mean()),
        se=float(values.std(ddof=1) / math.sqrt(reps)),
        reps=reps,
    )


def window_levels(n: int, p: float, eps: float) -> tuple[float, float, float, float]:
    """Decreasing boundary levels bracketing the stationary count window:
    pn + 2*alpha, pn + (1+eps)*alpha, pn + (1-eps/2)*alpha, pn + (1-eps)*alpha."""
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    alpha = math.sqrt(p * (1.0 - p) * n * math.log(n))
    pn = p * n
    return (
        pn + 2.0 * alpha,
        pn + (1.0 + eps) * alpha,
        pn + (1.0 - eps / 2.0) * alpha,
        pn + (1.0 - eps) * alpha,
    )


def maxima_between_levels(
    params: Params,
    levels,
    rng=None,
    truncate_at_hit: bool = False,
) -> LevelMaxima:
    """Running maxima of y between successive boundary-level passage times.

    Interval i spans [t(levels[i-1]), t(levels[i])) where t(b) is the
    first step with n - z <= b and t(levels[-1]) means step 0.  The chain
    is well defined past the first y = n - z and keeps running through the
    last level by default; with truncate_at_hit it stops there and later
    intervals are flagged.  Empty intervals yield -inf.
    """
    if params.q <= 0.0:
        raise ValueError("boundary levels require q > 0")
    levels = [float(b) for b in levels]
    if any(b <= 0 for b in levels):
        raise ValueError("levels must be positive")
    if any(a <= b for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly decreasing")
    thresholds = np.array([math.floor(b) for b in levels], dtype=np.int64)
    maxima_raw, hit_step, hit_y, cur_end = _kernels.bup_hit_levels(
        params.n, params.p, params.q, as_seed(rng), thresholds, truncate_at_hit
    )
    maxima = [float(m) if m >= 0 else -math.inf for m in maxima_raw]
    truncated = [False] * len(levels)
    if truncate_at_hit and hit_step >= 0:
        for i in range(int(cur_end), len(levels)):
            truncated[i] = True
    return LevelMaxima(
        levels=levels,
        maxima=maxima,
        hit_step=int(hit_step) if hit_step >= 0 else None,
        hit_y=int(hit_y) if hit_step >= 0 else None,
        truncated=truncated,
    )


def drift_regression(params: Params, nsteps: int, rng=None):
    """OLS fit of one-step increments against y over a stationary run.

    Returns (slope, se_slope, intercept); the chain's conditional drift is
    (1 - q) * (p - y/n), so the slope estimates -(1 - q)/n.
    """
    sy, syy, sd, sdd, syd, m = _kernels.bup_increment_sums(
        params.n, params.p, params.q, nsteps, as_seed(rng)
    )
    sxx = syy - sy * sy / m
    sxy = syd - sy * sd / m
    slope = sxy / sxx
    intercept = (sd - slope * sy) / m
    ss_res = sdd - sd * sd / m - slope * sxy
    se_slope = math.sqrt(max(ss_res, 0.0) / (m - 2) / sxx)
    return slope, se_slope, intercept
