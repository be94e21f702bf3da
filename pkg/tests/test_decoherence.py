import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from polaron_dyn import DomainError, ModelParams
from polaron_dyn.decoherence import (SeriesOverflowError, beta_kernel, decoherence_profile, gamma,
                                     gamma_longtime, gamma_longtime_asymptotic, gamma_parity,
                                     gamma_rate, truncation_order)

P05 = ModelParams(J=0.1, omega=1.0, g=0.5)
P2 = ModelParams(J=0.1, omega=1.0, g=2.0)

# Reference values from 40-digit partial sums of the defining series (mpmath, 400 terms).
FROZEN = {
    "beta_plus_pi_2_g05": 0.006960890224568832606,
    "gamma_pi_g05": 0.02998529216957749602,
    "gamma_1p3_g2": 1.953991133040992137e-4,
    "gamma_odd_1p3_g2": 9.770145855822217318e-5,
    "gamma_even_1p3_g2": 9.769765474587704053e-5,
    "beta_plus_0p7_g3": -5.535503381940240595e-8,
    "longtime_odd_g05": 0.01499264608478874801,
    "longtime_odd": {2.0: 9.770402348181846465e-5, 2.5: 3.653650945952944354e-5,
                     3.0: 1.686871741988197680e-5, 4.0: 5.125827518125926725e-6},
    "longtime_all_g2": 1.953790891345203046e-4,
}


def test_kernel_examples():
    assert beta_kernel("+", 0.0, P05) == 0.0
    assert abs(beta_kernel("+", 2 * math.pi, P05)) < 1e-15
    assert beta_kernel("+", math.pi / 2, P05) == pytest.approx(FROZEN["beta_plus_pi_2_g05"], rel=1e-13)
    assert beta_kernel("-", math.pi / 2, P05) == pytest.approx(-FROZEN["beta_plus_pi_2_g05"], rel=1e-13)
    assert beta_kernel(+1, 0.7, ModelParams(J=0.1, g=3.0)) == pytest.approx(
        FROZEN["beta_plus_0p7_g3"], rel=1e-10)


def test_gamma_examples():
    assert gamma(math.pi, P05) == pytest.approx(FROZEN["gamma_pi_g05"], rel=1e-13)
    assert abs(gamma(2 * math.pi, P05)) < 1e-15
    assert gamma(1.234, ModelParams(J=0.1, g=0.0)) == 0.0
    assert gamma(1.3, P2) == pytest.approx(FROZEN["gamma_1p3_g2"], rel=1e-12)
    assert gamma_parity("odd", 1.3, P2) == pytest.approx(FROZEN["gamma_odd_1p3_g2"], rel=1e-12)
    assert gamma_parity("even", 1.3, P2) == pytest.approx(FROZEN["gamma_even_1p3_g2"], rel=1e-12)


def test_parity_examples():
    assert abs(gamma_parity("even", math.pi, P05)) < 1e-16
    assert gamma_parity("odd", math.pi, P05) == pytest.approx(gamma(math.pi, P05), rel=1e-14)
    assert abs(gamma_parity("odd", 2 * math.pi, P05)) < 1e-15


def test_longtime_examples():
    assert gamma_longtime("all", ModelParams(g=0.0)) == 0.0
    assert gamma_longtime("odd", P05) == pytest.approx(FROZEN["longtime_odd_g05"], rel=1e-13)
    assert gamma_longtime("all", P2) == pytest.approx(FROZEN["longtime_all_g2"], rel=1e-12)
    for g, ref in FROZEN["longtime_odd"].items():
        assert gamma_longtime("odd", ModelParams(J=0.1, g=g)) == pytest.approx(ref, rel=1e-12)


def test_longtime_is_period_average():
    avg, _ = quad(lambda t: gamma(t, P2), 0.0, 2 * math.pi, limit=400, epsabs=1e-14, epsrel=1e-12)
    assert abs(avg / (2 * math.pi) - gamma_longtime("all", P2)) <= 1e-8


def test_asymptotic_values():
    assert gamma_longtime_asymptotic("odd_even", P2) == pytest.approx(7.8125e-5, rel=1e-15)
    assert gamma_longtime_asymptotic("odd", P2) == gamma_longtime_asymptotic("even", P2)
    # the two parity limits add up, so the full limit is twice the parity one
    assert gamma_longtime_asymptotic("all", P2) == pytest.approx(1.5625e-4, rel=1e-15)
    with pytest.raises(DomainError):
        gamma_longtime_asymptotic("all", ModelParams(g=0.0))


def test_asymptotic_error_shrinks():
    errs = []
    for g in (2.0, 2.5, 3.0, 4.0):
        p = ModelParams(J=0.1, g=g)
        exact = gamma_longtime("odd", p)
        errs.append(abs(exact - gamma_longtime_asymptotic("odd", p)) / exact)
    assert all(b < a for a, b in zip(errs, errs[1:]))
    for g in (3.0, 4.0):
        p = ModelParams(J=0.1, g=g)
        rel = abs(gamma_longtime("all", p) / gamma_longtime_asymptotic("all", p) - 1)
        assert rel < 0.1


def test_truncation_order_matches_design_estimate():
    for g in (1.0, 2.0, 3.0):
        x = 4 * g * g
        n, capped = truncation_order(ModelParams(g=g))
        assert not capped
        assert n <= x + 10 * math.sqrt(x) + 20


def test_overflow_guard():
    with pytest.raises(SeriesOverflowError):
        gamma(1.0, ModelParams(J=0.1, g=14.0))


@given(st.floats(0.0, 3.0), st.floats(0.0, 40.0))
def test_parity_decomposition(g, t):
    p = ModelParams(J=0.1, g=g)
    total = gamma(t, p)
    assert abs(total - gamma_parity("odd", t, p) - gamma_parity("even", t, p)) <= 1e-11 * total + 1e-300


@given(st.floats(0.0, 3.0), st.floats(0.0, 40.0))
def test_nonnegative(g, t):
    p = ModelParams(J=0.1, g=g)
    for par in ("odd", "even", "all"):
        assert gamma_parity(par, t, p) >= -1e-14


@given(st.floats(0.0, 2.0), st.floats(0.0, 2 * math.pi), st.integers(1, 3))
def test_periodicity(g, t, k):
    p = ModelParams(J=0.1, g=g)
    s = t + 2 * math.pi * k
    assert abs(gamma(s, p) - gamma(t, p)) <= 1e-12
    assert abs(beta_kernel("+", s, p) - beta_kernel("+", t, p)) <= 1e-12
    assert abs(beta_kernel("-", s, p) - beta_kernel("-", t, p)) <= 1e-12


@given(st.floats(0.01, 2.0), st.floats(0.01, 1.0), st.floats(0.0, 10.0))
def test_quadratic_in_j(j, g, t):
    a = gamma(t, ModelParams(J=j, g=g))
    b = gamma(t, ModelParams(J=1.0, g=g))
    assert a == pytest.approx(j * j * b, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("g", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("parity", ["odd", "even", "all"])
def test_rate_matches_finite_difference(g, parity):
    p = ModelParams(J=0.1, g=g)
    h = 1e-5
    for t in np.linspace(0.3, 6.0, 9):
        fd = (gamma_parity(parity, t + h, p) - gamma_parity(parity, t - h, p)) / (2 * h)
        rate = gamma_rate(parity, t, p)
        scale = max(abs(rate), 1e-3 * gamma_longtime("all", p))
        assert abs(fd - rate) <= 1e-6 * scale


def test_rate_and_kernels():
    t = np.linspace(0.0, 7.0, 15)
    bp, bm = beta_kernel("+", t, P05), beta_kernel("-", t, P05)
    np.testing.assert_allclose(gamma_rate("all", t, P05), 2 * bp, rtol=1e-13, atol=1e-18)
    np.testing.assert_allclose(gamma_rate("odd", t, P05), bp - bm, rtol=1e-13, atol=1e-18)
    np.testing.assert_allclose(gamma_rate("even", t, P05), bp + bm, rtol=1e-13, atol=1e-18)


def test_profile_invariants():
    grid = np.linspace(0.0, 2 * math.pi, 101)
    prof = decoherence_profile(grid, ModelParams(J=0.1, g=1.0))
    assert prof.gamma[0] == prof.gamma_odd[0] == prof.gamma_even[0] == 0.0
    assert abs(prof.gamma[-1]) < 1e-15
    np.testing.assert_allclose(prof.gamma, prof.gamma_odd + prof.gamma_even, rtol=1e-12, atol=1e-18)
    assert prof.truncation_n > 0
    np.testing.assert_allclose(prof.beta_plus, beta_kernel("+", grid, ModelParams(J=0.1, g=1.0)),
                               rtol=0, atol=1e-18)
