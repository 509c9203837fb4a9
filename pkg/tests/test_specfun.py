import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from dbgkit.specfun import (
    DomainError,
    ModelParams,
    RatioTable,
    bessel_i,
    bessel_i_scaled,
    bessel_k,
    bessel_k_scaled,
    drift_mu,
    gamma_fn,
    hat_k,
    log_bessel_k,
    ratio_r,
)
from quad_oracles import k_by_quad


def test_gamma_values():
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert gamma_fn(4.0) == pytest.approx(6.0, rel=1e-13)
    for x in (1e-3, 0.3, 2.7, 17.5):
        assert gamma_fn(x) == pytest.approx(math.gamma(x), rel=1e-12)
    with pytest.raises(DomainError):
        gamma_fn(0.0)


@pytest.mark.parametrize("nu", [0.0, 0.1, 0.25, 0.49, 0.5, 1.0, -1.7, 2.5, 3.0])
@pytest.mark.parametrize("x", [1e-6, 1e-3, 0.2, 1.0, 5.0, 29.0, 31.0, 50.0])
def test_bessel_k_against_quadrature(nu, x):
    assert bessel_k(nu, x) == pytest.approx(k_by_quad(nu, x), rel=1e-10)


def test_bessel_k_examples():
    assert bessel_k(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-13)
    assert bessel_k(0.5, 1.0) == pytest.approx(0.4610685044478946, rel=1e-13)
    assert bessel_k(-0.3, 2.0) == bessel_k(0.3, 2.0)
    assert bessel_k(0.0, 1e-6) / (-math.log(1e-6)) == pytest.approx(1.0, rel=0.01)
    # frozen: K_0(sqrt 2) (quadrature above and scipy agree)
    assert bessel_k(0.0, math.sqrt(2.0)) == pytest.approx(0.23914221072608113, rel=1e-12)
    with pytest.raises(DomainError):
        bessel_k(0.0, 0.0)


def test_log_bessel_k_large_argument():
    for nu in (0.0, 0.3, 1.0):
        for x in (100.0, 400.0, 700.0):
            ref = math.log(special.kve(nu, x)) - x
            assert log_bessel_k(nu, x) == pytest.approx(ref, rel=1e-13)
    assert math.isfinite(log_bessel_k(0.0, 5000.0))
    assert bessel_k_scaled(0.0, 700.0) == pytest.approx(special.kve(0.0, 700.0), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(1e-4, 40.0))
def test_bessel_k_recurrence(nu, x):
    lhs = bessel_k(nu - 1, x) - bessel_k(nu + 1, x)
    rhs = -(2 * nu / x) * bessel_k(nu, x)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9 * bessel_k(nu + 1, x))


@settings(max_examples=60, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(1e-5, 50.0))
def test_bessel_k_symmetric_in_index(nu, x):
    assert bessel_k(nu, x) == pytest.approx(bessel_k(-nu, x), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(1e-3, 30.0), st.floats(1.001, 2.0))
def test_bessel_k_decreasing_in_x(nu, x, factor):
    assert bessel_k(nu, x * factor) < bessel_k(nu, x)


def test_bessel_i():
    assert bessel_i(0.0, 0.0) == 1.0
    x = 1e-7
    assert bessel_i(-0.25, x) == pytest.approx(x**-0.25 / (2**-0.25 * math.gamma(0.75)), rel=1e-6)
    # large-x form with its first two corrections
    assert bessel_i(0.0, 10.0) * math.exp(-10) * math.sqrt(2 * math.pi * 10) == pytest.approx(
        1 + 1 / 80 + 9 / (2 * 6400), rel=1e-4)
    for nu in (-0.4, 0.0, 0.25, 1.5):
        for x in (0.01, 1.0, 12.0, 29.9, 30.1, 50.0):
            assert bessel_i(nu, x) == pytest.approx(special.iv(nu, x), rel=1e-10)
    assert bessel_i_scaled(0.3, 600.0) == pytest.approx(special.ive(0.3, 600.0), rel=1e-12)
    with pytest.raises(DomainError):
        bessel_i(-1.5, 1.0)


def test_hat_k():
    assert hat_k(0.5, 0.0) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-13)
    assert hat_k(0.0, 1.3) == bessel_k(0.0, 1.3)
    vals = [hat_k(0.25, x) for x in (0.0, 0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # continuity at 0
    assert hat_k(0.3, 1e-9) == pytest.approx(hat_k(0.3, 0.0), rel=1e-5)
    with pytest.raises(DomainError):
        hat_k(0.0, 0.0)


@pytest.mark.parametrize("nu", [0.1, 0.5, 1.3])
@pytest.mark.parametrize("x", [0.3, 1.0, 4.0])
def test_hat_k_derivative(nu, x):
    h = 1e-5 * x
    fd = (hat_k(nu, x + h) - hat_k(nu, x - h)) / (2 * h)
    assert fd == pytest.approx(-(x**nu) * bessel_k(nu - 1, x), rel=1e-7)


def test_ratio_examples():
    for a in (0.0, 0.2, 0.49):
        assert ratio_r(a, 0.0) == a
    for x in (0.1, 1.0, 10.0, 100.0):
        assert ratio_r(0.5, x) == pytest.approx(0.5 + x, rel=1e-13)
    ref = 1.0 * k_by_quad(1.0, 1.0) / k_by_quad(0.0, 1.0)
    assert ratio_r(0.0, 1.0) == pytest.approx(ref, rel=1e-11)
    assert ratio_r(0.0, 1.0) == pytest.approx(1.4296, abs=1e-4)
    # large x stays finite where both Bessel factors underflow
    assert ratio_r(0.2, 800.0) == pytest.approx(800.0 + 0.5, rel=1e-3)


def test_ratio_monotone_and_bounded():
    xs = np.concatenate([[0.0], np.logspace(-6, 1, 60)])
    alphas = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    table = np.array([ratio_r(a, xs) for a in alphas])
    assert np.all(np.diff(table, axis=0)[:, 1:] > 0)
    assert np.all(np.diff(table, axis=1) > 0)
    for a in alphas[:-1]:
        # 1 - a - x K_{1-a}/K_a = 1 - R_a(x)
        lhs = 1.0 - ratio_r(a, xs)
        assert np.all(lhs > -xs**2 + 0.25)


def test_ratio_modulus_of_continuity():
    xs = np.concatenate([[0.0], np.logspace(-8, np.log10(50), 400)])
    r0 = ratio_r(0.0, xs)
    mods = [np.max(np.abs(ratio_r(e, xs) - r0)) / e for e in (0.2, 0.1, 0.05, 0.025)]
    # uniformly bounded by one constant across halvings
    assert max(mods) < 2.0 * min(mods)
    assert max(mods) < 5.0


def test_small_x_switch_is_continuous():
    for a in (0.0, 0.1, 0.3):
        lo = ratio_r(a, 0.9999e-8)
        hi = ratio_r(a, 1.0001e-8)
        assert lo == pytest.approx(hi, rel=5e-5)


def test_drift():
    for a in (0.0, 0.25):
        assert drift_mu(a, 1.0, 0.0) == pytest.approx(2 * (1 - a))
    for x in (-0.7, 0.0, 0.3, 2.0):
        assert drift_mu(0.5, 0.5, x) == pytest.approx(1 - 2 * math.sqrt(abs(x)), abs=1e-13)
    assert drift_mu(0.0, 0.5, 1.0) == pytest.approx(-0.8592, abs=1e-4)
    with pytest.raises(DomainError):
        drift_mu(0.1, 0.0, 1.0)


def test_nicholson_product_formula():
    for mu, nu, x in [(0.0, 0.3, 1.0), (0.2, 0.2, 2.0)]:
        f = lambda t: bessel_k(mu + nu, 2 * x * math.cosh(t)) * math.cosh((mu - nu) * t)
        val, _ = integrate.quad(f, 0, 8, epsabs=0, epsrel=1e-12, limit=200)
        assert bessel_k(mu, x) * bessel_k(nu, x) == pytest.approx(2 * val, rel=1e-8)


def test_model_params():
    p = ModelParams(0.25, 2.0)
    assert p.c_star == pytest.approx(math.pi * 2**0.75 / math.gamma(0.25))
    assert p.lambda_alpha == pytest.approx(p.c_star * 2**0.25)
    assert p.c_alpha == pytest.approx(math.gamma(0.75) / (2 * math.pi))
    assert p.c_prime == pytest.approx(p.c_star, rel=1e-14)
    with pytest.raises(DomainError):
        ModelParams(0.5, 1.0)
    with pytest.raises(DomainError):
        ModelParams(0.1, 0.0)


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.3])
def test_ratio_table(alpha):
    t = RatioTable.build(alpha, n_log=2000, n_lin=8000)
    u = np.concatenate([np.logspace(-14, 0, 300), np.linspace(1, 250, 300)])
    assert np.allclose(t(u), ratio_r(alpha, u), rtol=1e-4)
