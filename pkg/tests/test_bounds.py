import math

import numpy as np
import pytest
from scipy import integrate, special

from mimocast import bounds as b
from mimocast.channel import complex_gaussian
from mimocast.netgraph import build_routing_tree, generate_topology

LAM_GRID = np.linspace(0.0, 40.0, 100)


def test_incomplete_gamma():
    assert b.lower_incomplete_gamma(1, 0.0) == 0.0
    for lam in (0.1, 1.0, 7.5):
        assert np.isclose(b.lower_incomplete_gamma(1, lam), 1 - np.exp(-lam))
        for n in (1, 2, 5):
            # scipy's regularized gamma times Gamma(n)
            assert np.isclose(b.lower_incomplete_gamma(n, lam),
                              special.gammainc(n, lam) * math.factorial(n - 1))
    assert abs(b.lower_incomplete_gamma(3, 2.0) - 0.646647167633873) < 1e-12
    with pytest.raises(ValueError):
        b.lower_incomplete_gamma(0, 1.0)
    with pytest.raises(ValueError):
        b.lower_incomplete_gamma(2.5, 1.0)


def test_determinant_cdf_basics():
    for M in (1, 2, 3, 4):
        assert b.wishart_max_eig_cdf(M, 0.0) == 0.0
    assert abs(b.wishart_max_eig_cdf(2, 1.0) - 0.0316969597) < 1e-9
    assert abs(b.cdf_m2(1.0) - 0.0316969597) < 1e-9
    with pytest.raises(ValueError):
        b.wishart_max_eig_cdf(0, 1.0)


@pytest.mark.parametrize("M,closed", [(1, b.cdf_m1), (2, b.cdf_m2), (4, b.cdf_m4)])
def test_closed_forms_match_determinant(M, closed):
    for lam in LAM_GRID:
        assert abs(float(closed(lam)) - b.wishart_max_eig_cdf(M, lam)) <= 1e-10


def test_m4_at_zero():
    assert np.isclose(b.f4(0.0), 1.0)
    assert b.f1(0.0) == b.f2(0.0) == b.f3(0.0) == 0.0
    assert abs(float(b.cdf_m4(0.0))) < 1e-15
    assert float(b.cdf_m2(0.0)) == 0.0


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_cdf_shape(M):
    vals = np.array([b.max_eig_cdf(M, x) for x in np.linspace(0, 60, 601)])
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) >= -1e-12)
    assert abs(vals[-1] - 1.0) < 1e-6


# Central differences resolve 1e-6 relative only while the derivative is not
# swamped by rounding in the function value; beyond that the identities are
# checked as definite integrals against quadrature.
FD_GRID = np.linspace(0.3, 8.0, 30)


def _central_diff(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_fprime_identities(i):
    f = getattr(b, f"f{i}")
    fp = getattr(b, f"f{i}_prime")
    for lam in FD_GRID:
        fd = -_central_diff(lambda x: float(f(x)), lam)
        exact = float(fp(lam))
        assert abs(fd - exact) <= 1e-6 * max(abs(exact), 1e-12) + 1e-12


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_fhat_antiderivatives(i):
    fh = getattr(b, f"f{i}_hat")
    fp = getattr(b, f"f{i}_prime")
    for lam in FD_GRID:
        fd = _central_diff(fh, lam)
        exact = float(fp(lam)) / lam
        assert abs(fd - exact) <= 1e-6 * max(abs(exact), 1e-10) + 1e-12
    for lo, hi in ((0.3, 8.0), (5.0, 20.0), (10.0, 40.0)):
        want = integrate.quad(lambda x: float(fp(x)) / x, lo, hi, epsabs=0, epsrel=1e-12,
                              limit=200)[0]
        assert abs(fh(hi) - fh(lo) - want) <= 1e-9 * abs(want) + 1e-15


def test_g_antiderivatives():
    for c in (1.0, 2.0, 3.0, 4.0):
        for lam in (0.05, 0.7, 2.0, 8.0 / c):
            fd = _central_diff(lambda x: b.g1(c, x), lam, h=1e-5 * lam)
            exact = math.exp(-c * lam) / lam
            assert abs(fd - exact) <= 1e-6 * exact
        for lo, hi in ((0.05, 3.0), (2.0, 40.0)):
            want = integrate.quad(lambda x: math.exp(-c * x) / x, lo, hi,
                                  epsabs=0, epsrel=1e-12)[0]
            assert abs(b.g1(c, hi) - b.g1(c, lo) - want) <= 1e-10 * want
    for c in (-1.0, -2.0, -3.0):
        for n in range(8):
            for x in (0.3, 2.0, 9.0):
                fd = _central_diff(lambda t: b.g2(c, n, t), x)
                exact = x**n * math.exp(c * x)
                rounding = 1e-15 * abs(b.g2(c, n, x)) / 1e-5
                assert abs(fd - exact) <= 1e-6 * abs(exact) + rounding
    for x in (0.2, 1.0, 3.0):
        fd = _central_diff(b.s_tilde, x)
        assert abs(fd - math.exp(-x * x) / x) <= 1e-6 * math.exp(-x * x) / x


def test_g1_taylor_agrees_where_stable():
    for c in (1.0, 2.0):
        for lam, lam_hat in ((0.5, 1.0), (2.0, 1.5), (3.0, 2.0)):
            assert np.isclose(b.g1_taylor(c, lam, lam_hat), b.g1(c, lam), rtol=1e-9)
    with pytest.raises(b.ConvergenceError):
        b.g1_taylor(4.0, 40.0, 20.0, max_terms=5)


def _sample_max_eig(M, n, seed):
    H = complex_gaussian(np.random.default_rng(seed), (n, M, M))
    return np.linalg.eigvalsh(H @ np.conj(np.swapaxes(H, 1, 2)))[:, -1]


@pytest.mark.parametrize("M,cdf", [(2, b.cdf_m2), (4, b.cdf_m4)])
def test_sampled_wishart(M, cdf):
    lam = np.sort(_sample_max_eig(M, 100000, M))
    emp_hi = np.arange(1, len(lam) + 1) / len(lam)
    emp_lo = np.arange(len(lam)) / len(lam)
    F = cdf(lam)
    assert max(np.max(np.abs(F - emp_hi)), np.max(np.abs(F - emp_lo))) <= 0.01


def test_upper_bound_m1_value():
    lam = 5.498 * 25 / 10**2.5
    inp = b.BoundInputs([lam], 1)
    assert abs(lam - 0.4347) < 1e-4
    assert np.isclose(b.connectivity_upper_bound(inp), np.exp(-lam))
    assert np.isclose(b.connectivity_upper_bound(inp), 0.6475, atol=1e-4)
    for M in (1, 2, 3, 4):
        assert b.connectivity_upper_bound(b.BoundInputs([0.0, 0.0], M)) == 1.0


@pytest.mark.parametrize("M", [2, 3, 4])
def test_upper_bound_product_form(M):
    lam = np.random.default_rng(M).uniform(0.01, 5, 12)
    direct = np.prod([1 - b.wishart_max_eig_cdf(M, x) for x in lam])
    assert abs(b.connectivity_upper_bound(b.BoundInputs(lam, M)) - direct) <= 1e-12


def test_gain_ratios():
    assert b.antenna_gain_ratios(b.BoundInputs([1e-12] * 4, 2))[0] == pytest.approx(1.0)
    r2s = [b.antenna_gain_ratios(b.BoundInputs(np.full(5, s), 2))[0]
           for s in np.linspace(0.01, 5, 30)]
    assert np.all(np.diff(r2s) > 0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        lam = rng.uniform(1e-6, 5, rng.integers(1, 10))
        r2, r4 = b.antenna_gain_ratios(b.BoundInputs(lam, 1))
        assert r4 >= r2 >= 1
        u1 = b.connectivity_upper_bound(b.BoundInputs(lam, 1))
        assert np.isclose(r2 * u1, b.connectivity_upper_bound(b.BoundInputs(lam, 2)))
        assert np.isclose(r4 * u1, b.connectivity_upper_bound(b.BoundInputs(lam, 4)))


def power_oracle(M, lam_min, lam_max=40.0):
    if M == 1:
        f = lambda h: 2 * np.exp(-h * h) / h
        return integrate.quad(f, math.sqrt(lam_min), lam_max, limit=200,
                              epsabs=0, epsrel=1e-11)[0]
    pdf = {2: b.pdf_m2, 4: b.pdf_m4}[M]
    return integrate.quad(lambda x: float(pdf(x)) / x, lam_min, lam_max, limit=200,
                          epsabs=0, epsrel=1e-11)[0]


@pytest.mark.parametrize("M", [1, 2, 4])
@pytest.mark.parametrize("lam_min", [0.05, 0.25, 0.5, 1.0, 2.0, 5.0])
def test_power_integrals_vs_quadrature(M, lam_min):
    got = b.avg_power(M, lam_min, 40.0)
    want = power_oracle(M, lam_min)
    assert abs(got - want) <= 1e-3 * abs(want)


def test_pdf_is_cdf_derivative():
    for lam in (0.5, 2.0, 6.0):
        assert np.isclose(float(b.pdf_m2(lam)), _central_diff(lambda x: float(b.cdf_m2(x)), lam), rtol=1e-6)
        assert np.isclose(float(b.pdf_m4(lam)), _central_diff(lambda x: float(b.cdf_m4(x)), lam), rtol=1e-6)


def test_power_degenerate_and_errors():
    for M in (1, 2, 4):
        assert b.avg_power(M, 40.0, 40.0) == 0.0
        assert b.avg_power(M, 50.0, 40.0) == 0.0
        with pytest.raises(ValueError):
            b.avg_power(M, 0.0)
    with pytest.raises(ValueError):
        b.avg_power(3, 1.0)


def test_sum_power_bound():
    assert b.sum_power_lower_bound([3.5], 1) == 3.5
    e = [1.0, 2.0, 4.0]
    assert b.sum_power_lower_bound(e, 2) == b.sum_power_lower_bound(e, 1) / 2
    with pytest.raises(ValueError):
        b.sum_power_lower_bound(e, 0)


def test_network_power_bound_manual_sum():
    topo = generate_topology(30, 25.0, seed=1)
    d = build_routing_tree(topo).distances
    assert len(d) == 29
    st, pmax = 2 ** 2.7 - 1, 10 ** 2.5
    inp = b.BoundInputs.from_links(d, st, pmax, 2, n_slots=3)
    manual = 0.0
    for dk in d:
        lam = st * dk**2 / pmax
        manual += st * dk**2 * power_oracle(2, lam)
    assert np.isclose(b.power_lower_bound(inp, st, d), manual / 3, rtol=1e-6)


def test_inputs_validation():
    with pytest.raises(ValueError):
        b.BoundInputs([-1.0], 2)
    with pytest.raises(ValueError):
        b.BoundInputs([1.0], 0)
