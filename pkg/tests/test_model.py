import math

import pytest
from hypothesis import given, strategies as st

from arwlab.model import (
    Params,
    constants,
    derive_p,
    gumbel_cdf,
    gumbel_quantile,
    kl_bernoulli,
    mu,
    normalize_S,
)


def test_derive_p_values():
    assert derive_p(1.0) == pytest.approx(0.5)
    assert derive_p(3.0) == pytest.approx(0.75)


@pytest.mark.parametrize("lam", [0.0, -1.0])
def test_derive_p_rejects_nonpositive(lam):
    with pytest.raises(ValueError):
        derive_p(lam)


def test_params_validation():
    with pytest.raises(ValueError):
        Params(n=0, p=0.5, q=0.5)
    with pytest.raises(ValueError):
        Params(n=5, p=0.0, q=0.5)
    with pytest.raises(ValueError):
        Params(n=5, p=0.5, q=1.5)
    params = Params.from_lambda(n=5, lam=1.0, q=0.25)
    assert params.p == pytest.approx(0.5)


def test_constants_alpha_n():
    c = constants(Params(n=10**4, p=0.5, q=1.0 / (10**4 + 1)))
    assert c.alpha_n == pytest.approx(151.74271293851464, rel=1e-12)


def test_constants_f_n():
    q = 2000.0**-1.25
    c = constants(Params(n=2000, p=0.5, q=q))
    assert c.r_n == pytest.approx(2000.0**1.25, rel=1e-12)
    assert c.f_n == pytest.approx(3.3765890613625347, rel=1e-12)


def test_constants_q_prime():
    c = constants(Params(n=4, p=0.5, q=0.2))
    assert c.q_prime == pytest.approx(1.0, rel=1e-12)


def test_constants_absent_values():
    c0 = constants(Params(n=100, p=0.5, q=0.0))
    assert c0.r_n is None and c0.f_n is None
    assert c0.q_prime == 0.0
    c1 = constants(Params(n=100, p=0.5, q=1.0))
    assert c1.q_prime is None
    # r_n = sqrt(n) exactly: f_n needs r_n strictly above sqrt(n)
    c2 = constants(Params(n=10**4, p=0.5, q=0.01))
    assert c2.f_n is None


@pytest.mark.parametrize(
    "n,q", [(4, 0.001), (10, 0.2), (100, 0.5), (10**4, 0.9), (50, 0.99)]
)
def test_q_prime_inverts_to_q(n, q):
    c = constants(Params(n=n, p=0.5, q=q))
    assert abs(c.q_prime / (n + c.q_prime) - q) <= 1e-12


def test_mu_values():
    assert mu(0.0) == 0.0
    assert mu(1.0) == pytest.approx(0.24197072451914337, rel=1e-12)
    assert mu(4.0) == pytest.approx(5.353209030595415e-4, rel=1e-12)


def test_mu_decreasing_from_one():
    xs = [1.0 + 0.01 * i for i in range(701)]
    for a, b in zip(xs, xs[1:]):
        assert mu(a) > mu(b)


def test_gumbel_cdf_values_and_limits():
    assert gumbel_cdf(0.0) == pytest.approx(0.36787944117144233, rel=1e-12)
    assert gumbel_cdf(math.inf) == 1.0
    assert gumbel_cdf(-math.inf) == 0.0


def test_gumbel_cdf_monotone():
    # strictly increasing wherever double precision can resolve the tails
    xs = [-5.5 + 0.05 * i for i in range(701)]
    vals = [gumbel_cdf(x) for x in xs]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v < 1.0 for v in vals)


@given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_gumbel_quantile_roundtrip(u):
    assert gumbel_cdf(gumbel_quantile(u)) == pytest.approx(u, abs=1e-12)


def test_normalize_S_inverse_point():
    q = 2000.0**-1.25
    c = constants(Params(n=2000, p=0.5, q=q))
    S = c.p * c.n + c.a_n * c.f_n + (c.a_n / c.f_n) * math.log(c.sigma / math.sqrt(2 * math.pi))
    assert normalize_S(S, c) == pytest.approx(0.0, abs=1e-9)


def test_normalize_S_at_f_n():
    # with (S - pn)/a_n = f_n the normalization reduces to -log(sigma/sqrt(2*pi))
    q = 2000.0**-1.25
    c = constants(Params(n=2000, p=0.5, q=q))
    S = c.p * c.n + c.a_n * c.f_n
    assert normalize_S(S, c) == pytest.approx(1.612085713764618, rel=1e-12)


def test_normalize_S_requires_f_n():
    c = constants(Params(n=100, p=0.5, q=0.0))
    with pytest.raises(ValueError):
        normalize_S(50.0, c)


def test_kl_values():
    assert kl_bernoulli(0.5, 0.5) == 0.0
    assert kl_bernoulli(0.75, 0.5) == pytest.approx(0.13081203594113697, rel=1e-12)
    assert kl_bernoulli(0.25, 0.5) == pytest.approx(kl_bernoulli(0.75, 0.5), rel=1e-12)


@pytest.mark.parametrize("a,p", [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)])
def test_kl_domain(a, p):
    with pytest.raises(ValueError):
        kl_bernoulli(a, p)


@given(
    st.floats(min_value=0.01, max_value=0.99),
    st.floats(min_value=0.01, max_value=0.99),
)
def test_kl_nonnegative_zero_iff_equal(a, p):
    val = kl_bernoulli(a, p)
    assert val >= 0.0
    if a == p:
        assert val == 0.0
    elif abs(a - p) > 1e-6:
        assert val > 0.0
