import math

import mpmath
import numpy as np
import pytest
from scipy.stats import binom

from arwlab import bup, oracle
from arwlab.model import Params
from arwlab.rng import derive_seed


def power_method_pmf(n, p, q, tol=1e-14):
    """Independent absorption-law oracle: iterate the full transition
    matrix over all (y, z) states until the transient mass is gone."""
    states = [(y, z) for z in range(n) for y in range(n - z)]
    index = {s: i for i, s in enumerate(states)}
    T = np.zeros((len(states), len(states)))
    absorb = np.zeros((len(states), n + 1))
    for (y, z), i in index.items():
        up = (1 - q) * p * (n - y) / n
        down = (1 - q) * (1 - p) * y / n
        stay = 1 - q - up - down
        T[i, i] += stay
        if y + 1 + z == n:
            absorb[i, y + 1] += up
        else:
            T[i, index[(y + 1, z)]] += up
        if y > 0:
            T[i, index[(y - 1, z)]] += down
        if y + z + 1 == n:
            absorb[i, y] += q
        else:
            T[i, index[(y, z + 1)]] += q
    dist = np.zeros(len(states))
    mass = np.zeros(n + 1)
    for y in range(n + 1):
        w = math.comb(n, y) * p**y * (1 - p) ** (n - y)
        if y == n:
            mass[n] += w
        else:
            dist[index[(y, 0)]] = w
    while dist.sum() > tol:
        mass += dist @ absorb
        dist = dist @ T
    return mass


def test_exact_pmf_closed_form_n1():
    pmf = oracle.exact_final_pmf(1, 0.5, 0.5)
    assert pmf.mass[1] == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert pmf.mass[0] == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_exact_pmf_q1_first_step_lazy():
    pmf = oracle.exact_final_pmf(1, 0.5, 1.0)
    assert pmf.mass[1] == pytest.approx(0.5, rel=1e-12)


def test_exact_pmf_p1_absorbs_immediately():
    pmf = oracle.exact_final_pmf(4, 1.0, 0.5)
    assert pmf.mass[4] == pytest.approx(1.0, rel=1e-14)
    assert pmf.mass[:4] == pytest.approx(np.zeros(4), abs=1e-15)


def test_exact_pmf_q1_is_binomial():
    # every step is lazy, so the start is frozen until the boundary meets it
    pmf = oracle.exact_final_pmf(6, 0.3, 1.0)
    ref = np.array([math.comb(6, k) * 0.3**k * 0.7 ** (6 - k) for k in range(7)])
    assert np.abs(pmf.mass - ref).max() < 1e-13


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("q", [0.2, 0.5, 0.9])
def test_exact_pmf_mass_sums_to_one(p, q):
    for n in range(1, 9):
        pmf = oracle.exact_final_pmf(n, p, q)  # validates the total internally
        assert abs(math.fsum(pmf.mass.tolist()) - 1.0) < 1e-10


@pytest.mark.parametrize("n,p,q", [(2, 0.5, 0.5), (3, 0.5, 1 / 3), (4, 0.7, 0.3), (3, 0.2, 0.8)])
def test_exact_pmf_matches_power_method(n, p, q):
    pmf = oracle.exact_final_pmf(n, p, q)
    ref = power_method_pmf(n, p, q)
    assert np.abs(pmf.mass - ref).max() < 1e-12


@pytest.mark.parametrize("n,p,q", [(3, 0.5, 1 / 3), (6, 0.3, 0.7), (8, 0.7, 0.2), (1, 0.5, 0.5)])
def test_forward_sweep_matches_dense_solver(n, p, q):
    a = oracle.exact_final_pmf_large(n, p, q)
    b = oracle.exact_final_pmf(n, p, q)
    assert np.abs(a.mass - b.mass).max() < 1e-13


def test_forward_sweep_scales_up():
    pmf = oracle.exact_final_pmf_large(500, 0.5, 0.01)
    assert abs(math.fsum(pmf.mass.tolist()) - 1.0) < 1e-10
    mean = pmf.mean()
    assert 250 < mean < 320  # sits above pn by a few fluctuation units


def test_forward_sweep_matches_monte_carlo_midsize():
    n, p = 100, 0.5
    q = float(n) ** -1.25
    pmf = oracle.exact_final_pmf_large(n, p, q)
    cdf = np.cumsum(pmf.mass)
    reps = 5000
    params = Params(n=n, p=p, q=q)
    ys = np.array([bup.run_to_hitting(params, rng=derive_seed(606, i)).y
                   for i in range(reps)])
    ecdf = np.cumsum(np.bincount(ys, minlength=n + 1) / reps)
    # both cdfs share the integer lattice; compare them directly
    from arwlab.stats import dkw_threshold

    assert np.abs(ecdf - cdf).max() < dkw_threshold(reps, alpha=0.01)


def test_exact_pmf_rejects_bad_inputs():
    with pytest.raises(ValueError):
        oracle.exact_final_pmf(13, 0.5, 0.5)
    with pytest.raises(ValueError):
        oracle.exact_final_pmf(4, 0.5, 0.0)


def test_monte_carlo_matches_exact_pmf():
    n, p, q = 3, 0.5, 1 / 3
    reps = 2 * 10**5
    pmf = oracle.exact_final_pmf(n, p, q)
    counts = np.zeros(n + 1)
    params = Params(n=n, p=p, q=q)
    for i in range(reps):
        counts[bup.run_to_hitting(params, rng=derive_seed(20250810, i)).y] += 1
    assert pmf.tv_distance(counts / reps) < 0.01


def test_fixed_energy_mean_closed_forms():
    assert oracle.exact_fixed_energy_mean(1, 0.5, 1) == pytest.approx(1.0, rel=1e-12)
    assert oracle.exact_fixed_energy_mean(2, 0.5, 1) == pytest.approx(1.0, rel=1e-12)
    # nearly-certain start at m: expectation collapses toward zero
    assert oracle.exact_fixed_energy_mean(1, 0.999, 1) == pytest.approx(
        0.001 / 0.999, rel=1e-9
    )


def test_fixed_energy_mean_rejects():
    with pytest.raises(ValueError):
        oracle.exact_fixed_energy_mean(4, 0.5, 5)
    with pytest.raises(ValueError):
        oracle.exact_fixed_energy_mean(4000, 0.5, 5)


@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (10, 5), (10, 10)])
def test_fixed_energy_mean_matches_monte_carlo(n, m):
    reps = 10**5
    exact = oracle.exact_fixed_energy_mean(n, 0.5, m)
    steps = np.empty(reps)
    for i in range(reps):
        res = bup.run_fixed_energy(n, 0.5, m, rng=derive_seed(7 + n * 100 + m, i),
                                   step_cap=10**7)
        assert not res.cap_hit
        steps[i] = res.steps
    se = steps.std(ddof=1) / math.sqrt(reps)
    assert abs(steps.mean() - exact) <= 3 * se + 1e-9


def test_occupancy_pmf_mean_matches_closed_form():
    probs = oracle.occupancy_pmf(100, 50)
    mean = float(np.dot(np.arange(len(probs)), probs))
    assert mean == pytest.approx(oracle.expected_occupied(100, 50), rel=1e-12)


def mpmath_tail(n, p, k):
    with mpmath.workdps(60):
        total = mpmath.mpf(0)
        for i in range(k, n + 1):
            total += mpmath.binomial(n, i) * mpmath.mpf(p) ** i * (1 - mpmath.mpf(p)) ** (n - i)
        return total


def mpmath_tail_large(n, p, k):
    """Upper tail for large n: full-precision ratio recurrence from k."""
    with mpmath.workdps(60):
        p = mpmath.mpf(p)
        term = mpmath.e ** (
            mpmath.loggamma(n + 1)
            - mpmath.loggamma(k + 1)
            - mpmath.loggamma(n - k + 1)
            + k * mpmath.log(p)
            + (n - k) * mpmath.log(1 - p)
        )
        total = term
        odds = p / (1 - p)
        i = k
        while i < n and term > total * mpmath.mpf(10) ** -45:
            i += 1
            term *= mpmath.mpf(n - i + 1) / i * odds
            total += term
        return total


def test_binomial_tail_edges():
    assert oracle.binomial_tail(10, 0.5, 0) == 1.0
    assert oracle.binomial_tail(10, 0.5, 11) == 0.0
    assert oracle.binomial_tail(2, 0.5, 2) == pytest.approx(0.25, rel=1e-14)


def test_binomial_tail_small_exact():
    ref = float(mpmath_tail(20, 0.5, 12))
    assert oracle.binomial_tail(20, 0.5, 12) == pytest.approx(ref, rel=1e-13)


def test_binomial_tail_reference_point():
    val = oracle.binomial_tail(10**4, 0.5, 5200)
    ref = float(mpmath_tail(10**4, 0.5, 5200))
    assert val == pytest.approx(ref, rel=1e-12)
    assert val == pytest.approx(binom.sf(5199, 10**4, 0.5), rel=1e-9)


@pytest.mark.parametrize("k", [500000, 500500, 501500, 499000])
def test_binomial_tail_large_n(k):
    n = 10**6
    val = oracle.binomial_tail(n, 0.5, k)
    ref = binom.sf(k - 1, n, 0.5)
    assert val == pytest.approx(ref, rel=5e-11)


def test_binomial_tail_large_n_high_precision():
    n, k = 10**6, 501500
    ref = float(mpmath_tail_large(n, 0.5, k))
    assert oracle.binomial_tail(n, 0.5, k) == pytest.approx(ref, rel=1e-12)


def test_binomial_tail_asymmetric_p():
    val = oracle.binomial_tail(1000, 0.3, 330)
    ref = binom.sf(329, 1000, 0.3)
    assert val == pytest.approx(ref, rel=1e-10)
