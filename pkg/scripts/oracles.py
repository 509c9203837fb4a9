"""Independent quadrature oracles for frozen test values.

Each value is computed in the original order of integration with scipy's
adaptive quadrature and closed-form Gaussian heat actions, independently of
the swapped-order engine in dbgkit.kernels.  Run: python3 scripts/oracles.py
"""

import math

from scipy import integrate

from dbgkit.kernels import tau_s_beta


def ring_conv(beta, t, g):
    """int_0^t s(tau) g(t - tau) dtau, adaptive, original order."""
    lt2 = math.log(t / 2)
    a = integrate.quad(lambda v: tau_s_beta(beta, lt2 - math.exp(v)) * math.exp(v)
                       * g(t - math.exp(lt2 - math.exp(v))), -30, 5, limit=800, epsrel=1e-12, epsabs=0)[0]
    a += g(t) * integrate.quad(lambda v: tau_s_beta(beta, lt2 - math.exp(v)) * math.exp(v), 5, 80,
                               limit=800, epsrel=1e-12, epsabs=0)[0]
    b = integrate.quad(lambda tau: tau_s_beta(beta, math.log(tau)) / tau * g(t - tau), t / 2, t,
                       limit=800, epsrel=1e-12, epsabs=0)[0]
    return a + b


def gauss_H(r):
    # (P_{2r} e^{-|z|^2})(0)
    return 1.0 / (1.0 + 4.0 * r)


def heat2(r2, s):
    return math.exp(-r2 / (4.0 * s)) / (4.0 * math.pi * s)


def semigroup_gauss(beta, t, z0abs):
    r2 = z0abs**2
    free = 1.0 / (1.0 + 4.0 * t) * math.exp(-r2 / (1.0 + 4.0 * t))

    def inner(s):
        return heat2(r2, s) * ring_conv(beta, t - s, gauss_H)

    corr = integrate.quad(inner, 0.0, t, limit=200, epsrel=1e-10, epsabs=0, points=[r2 / 4])[0]
    return free + corr


def ring_gauss(beta, t):
    return ring_conv(beta, t, gauss_H)


if __name__ == "__main__":
    print("ring_p(1, 0.5, 0.3)          ", repr(ring_conv(1.0, 0.5, lambda r: math.exp(-0.09 / (4 * r)) / (4 * math.pi * r))))
    print("ring functional gauss (1,.5) ", repr(ring_gauss(1.0, 0.5)))
    print("semigroup gauss (1,.5,.7)    ", repr(semigroup_gauss(1.0, 0.5, 0.7)))
