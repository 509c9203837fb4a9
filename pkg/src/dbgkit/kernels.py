"""Deterministic kernels: heat and delta-Bose kernels, hitting and local-time laws,
Bessel transition densities and resolvents.

Convolutions against the kernel s^beta are evaluated with the order of
integration swapped.  With tau = t e^{-w},

    int_0^t s(tau) g(t - tau) dtau
        = 4 pi int_0^inf (beta t)^u [ g(t)/Gamma(u+1)
                                     + (1/Gamma(u)) int_0^inf e^{-u w} (g(t - t e^{-w}) - g(t)) dw ] du,

which removes the non-integrable-looking 1/(tau log^2 tau) behaviour of s at
0 and leaves two smooth integrals handled by composite Gauss-Legendre rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import digamma, gammainc, gammaln

from .specfun import DomainError, ModelParams, bessel_i_scaled, bessel_k, hat_k, log_bessel_k

__all__ = [
    "PlanarPoint",
    "TestFunction",
    "QuadratureSpec",
    "heat_kernel",
    "green_lambda",
    "s_beta",
    "tau_s_beta",
    "s_convolve",
    "ring_p",
    "p_beta",
    "heat_apply",
    "semigroup_apply",
    "ring_functional",
    "gig_density",
    "gig_cdf",
    "hitting_laplace",
    "bes_density",
    "lt_density",
    "lt_laplace",
    "lt_exp_moment",
    "mittag_leffler",
    "kappa_normalization",
    "resolvent_u",
    "resolvent_closed_form",
    "besab_marginal",
    "laplace_numeric",
    "s_beta_laplace_numeric",
    "p_beta_laplace_numeric",
    "dbg_resolvent_kernel",
]


# ----------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class PlanarPoint:
    re: float
    im: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError("PlanarPoint components must be finite")

    def __abs__(self):
        return math.hypot(self.re, self.im)

    def __complex__(self):
        return complex(self.re, self.im)

    @classmethod
    def of(cls, z) -> "PlanarPoint":
        if isinstance(z, PlanarPoint):
            return z
        if isinstance(z, (tuple, list)):
            return cls(float(z[0]), float(z[1]))
        c = complex(z)
        return cls(c.real, c.imag)


def _cz(z) -> complex:
    return complex(PlanarPoint.of(z))


@dataclass
class TestFunction:
    """Bounded nonnegative test function on the plane.

    ``eval`` maps a complex array to a real array.  For radial functions the
    profile r -> f(r) is evaluated as ``eval(r + 0j)``.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    bound: float
    radial_flag: bool = False
    name: str = "f"
    constant_value: float | None = None

    __test__ = False  # not a pytest class

    def __call__(self, z):
        return np.asarray(self.eval(np.asarray(z, dtype=complex)), dtype=float)

    def radial(self, r, n_theta: int = 256):
        """Radialization: average of f over the circle of radius r."""
        r = np.asarray(r, dtype=float)
        if self.radial_flag:
            return self(r + 0j)
        th = 2.0 * np.pi * np.arange(n_theta) / n_theta
        vals = self(r[..., None] * np.exp(1j * th))
        return vals.mean(axis=-1)

    @classmethod
    def constant(cls, value: float = 1.0) -> "TestFunction":
        v = float(value)
        if v < 0:
            raise DomainError("test functions are nonnegative")
        return cls(lambda z: np.full(np.shape(z), v), v, True, f"const({v})", v)

    @classmethod
    def gaussian(cls, c: float = 1.0) -> "TestFunction":
        """exp(-c |z|^2)."""
        return cls(lambda z: np.exp(-c * np.abs(z) ** 2), 1.0, True, f"gauss({c})")

    @classmethod
    def shifted_gaussian(cls, center, c: float = 1.0) -> "TestFunction":
        z0 = _cz(center)
        return cls(lambda z: np.exp(-c * np.abs(z - z0) ** 2), 1.0, False, f"gauss({c},{z0})")


@dataclass
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    truncation_radius: float | None = None
    level: int = 1  # node multiplier for the fixed composite rules

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")


# ----------------------------------------------------------------------------
# composite Gauss-Legendre


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gl_nodes(breaks, n: int = 16):
    """Nodes and weights of an n-point Gauss-Legendre rule on each panel."""
    b = np.asarray(breaks, dtype=float)
    x, w = _leggauss(n)
    lo, hi = b[:-1, None], b[1:, None]
    half = 0.5 * (hi - lo)
    return (lo + half * (x + 1.0)).ravel(), (half * w).ravel()


def _geometric_breaks(lo_exp=-14, hi=1.0):
    return np.concatenate([[0.0], np.logspace(lo_exp, 0, -lo_exp + 1)[:-1] * hi, [hi]])


# ----------------------------------------------------------------------------
# elementary kernels


def heat_kernel(z, t):
    """Planar Brownian transition density (1/(2 pi t)) exp(-|z|^2/(2t))."""
    t_arr = np.asarray(t, float)
    if np.any(t_arr <= 0):
        raise DomainError("heat_kernel requires t > 0")
    r2 = np.abs(np.asarray(z if not isinstance(z, PlanarPoint) else complex(z), dtype=complex)) ** 2
    out = np.exp(-r2 / (2.0 * t_arr)) / (2.0 * np.pi * t_arr)
    return float(out) if np.ndim(out) == 0 else out


def _heat_r2(r2, t):
    return np.exp(-r2 / (2.0 * t)) / (2.0 * np.pi * t)


def green_lambda(lam: float, z):
    """G_lambda(z) = K_0(sqrt(lambda)|z|)/(2 pi), the lambda-resolvent of P_{2t}."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    r = abs(PlanarPoint.of(z)) if not isinstance(z, np.ndarray) else np.abs(z)
    return bessel_k(0.0, math.sqrt(lam) * np.asarray(r)) / (2.0 * np.pi)


def _log_s_integrand(u, lbt):
    # log of (beta tau)^u / Gamma(u), for u > 0
    return u * lbt - gammaln(u)


def _u_star(lbt: float) -> float:
    """Solve digamma(u) = log(beta tau) by bisection in log u."""
    if lbt < -30.0:
        # digamma(u) = -1/u - gamma + O(u)
        return 1.0 / (-lbt - 0.5772156649015329)
    lo, hi = math.log(1e-16), math.log(max(4.0, math.exp(lbt) + 4.0))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if digamma(math.exp(mid)) < lbt:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def tau_s_beta(beta: float, log_tau: float, *, return_error: bool = False):
    """tau * s^beta(tau) as a function of log tau, usable where tau underflows."""
    if not beta > 0:
        raise DomainError("s_beta requires beta > 0")
    lbt = math.log(beta) + log_tau
    us = _u_star(lbt)
    upper = us + 40.0 * math.sqrt(us + 1.0)
    peak = _log_s_integrand(us, lbt)

    def f(v):
        # u = us * v
        u = us * v
        return 0.0 if u <= 0 else math.exp(_log_s_integrand(u, lbt) - peak)

    vmax = upper / us
    cuts = [c for c in (1.0, 4.0, 40.0, 400.0) if c < vmax]
    edges = [0.0] + cuts + [vmax]
    val = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f, lo, hi, limit=400, epsabs=1e-15, epsrel=1e-12)
        val += v
        err += e
    scale = 4.0 * math.pi * math.exp(peak) * us
    if return_error:
        return val * scale, err * scale
    return val * scale


def s_beta(beta: float, tau: float, *, return_error: bool = False):
    """s^beta(tau) = 4 pi int_0^inf beta^u tau^(u-1)/Gamma(u) du (adaptive quadrature)."""
    if not (beta > 0 and tau > 0):
        raise DomainError("s_beta requires beta > 0 and tau > 0")
    res = tau_s_beta(beta, math.log(tau), return_error=return_error)
    if return_error:
        return res[0] / tau, res[1] / tau
    return res / tau


# ----------------------------------------------------------------------------
# s-convolution engine


def _w_nodes(level: int):
    breaks = np.concatenate([_geometric_breaks(-14, 0.1)[:-1], [0.1, 0.2, 0.4, 0.7, 1.0, 1.5],
                             np.arange(2.0, 41.0, 1.0)])
    return gl_nodes(breaks, 16 * level)


def _u_nodes(lbt: float, level: int):
    us = _u_star(lbt)
    upper = us + 40.0 * math.sqrt(us + 1.0)
    width = 0.5 if upper < 60 else 1.0
    n_pan = int(math.ceil(upper / width))
    return gl_nodes(np.linspace(0.0, n_pan * width, n_pan + 1), 12 * level)


def s_convolve(beta: float, t: float, g: Callable[[np.ndarray], np.ndarray], level: int = 1) -> float:
    """int_0^t s^beta(tau) g(t - tau) dtau for g given as a function of r = t - tau."""
    if not (beta > 0 and t > 0):
        raise DomainError("s_convolve requires beta > 0 and t > 0")
    w, ww = _w_nodes(level)
    r = -t * np.expm1(-w)
    gt = float(np.asarray(g(np.array([t])))[0])
    h = np.asarray(g(r), dtype=float) - gt
    lbt = math.log(beta * t)
    u, wu = _u_nodes(lbt, level)
    # J(u) = sum_j ww_j e^{-u w_j} h_j
    J = np.exp(-np.outer(u, w)) @ (ww * h)
    lg = gammaln(u)
    term = gt * np.exp(u * lbt - gammaln(u + 1.0)) + np.exp(u * lbt - lg) * J
    return float(4.0 * np.pi * np.dot(wu, term))


# ----------------------------------------------------------------------------
# ring kernel and the delta-Bose kernel


def ring_p(beta: float, t: float, z, level: int = 1) -> float:
    """Density of the ring functional: int_0^t s^beta(tau) P_{2(t - tau)}(z) dtau, z != 0."""
    r2 = abs(PlanarPoint.of(z)) ** 2
    if not t > 0:
        raise DomainError("ring_p requires t > 0")
    if r2 == 0.0:
        raise DomainError("ring_p diverges at z = 0; use ring_functional for integrated forms")
    return s_convolve(beta, t, lambda r: _heat_r2(r2, 2.0 * r), level)


_SIGMA_BREAKS = np.array([0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.35, 0.5])


@lru_cache(maxsize=8)
def _sigma_nodes(level: int):
    # nodes on (0, 1) refined at both ends, with accurate complements 1 - sigma
    x, w = gl_nodes(_SIGMA_BREAKS, 10 * level)
    s = np.concatenate([x, 1.0 - x[::-1]])
    c = np.concatenate([1.0 - x, x[::-1]])
    ws = np.concatenate([w, w[::-1]])
    return s, c, ws


def _two_heat(r, a2, b2, level):
    """Q_r = int_0^r P_{2s}(a) P_{2(r-s)}(b) ds with |a|^2 = a2, |b|^2 = b2."""
    s, c, ws = _sigma_nodes(level)
    r = np.asarray(r, float)[:, None]
    vals = _heat_r2(a2, 2.0 * r * s) * _heat_r2(b2, 2.0 * r * c)
    return (r[:, 0]) * (vals @ ws)


def p_beta(beta: float, t: float, z, zt, level: int = 1) -> float:
    """Transition density P^beta_t(z, zt) for z, zt != 0."""
    if not (beta > 0 and t > 0):
        raise DomainError("p_beta requires beta > 0 and t > 0")
    a, b = _cz(z), _cz(zt)
    if a == 0 or b == 0:
        raise DomainError("p_beta is infinite when z or zt is 0")
    free = _heat_r2(abs(a - b) ** 2, 2.0 * t)
    a2, b2 = abs(a) ** 2, abs(b) ** 2
    corr = s_convolve(beta, t, lambda r: _two_heat(r, a2, b2, level), level)
    return float(free + corr)


# ----------------------------------------------------------------------------
# semigroups


def heat_apply(f: TestFunction, z0, T, level: int = 1):
    """(P_T f)(z0) for the planar heat kernel P_T (variance T per coordinate)."""
    z0c = _cz(z0)
    r0 = abs(z0c)
    T = np.atleast_1d(np.asarray(T, float))
    if f.radial_flag or r0 == 0.0:
        out = np.empty(T.size)
        for i, Ti in enumerate(T):
            s = math.sqrt(Ti)
            lo = max(0.0, r0 - 14.0 * s)
            hi = r0 + 14.0 * s
            if lo == 0.0:
                breaks = np.concatenate([_geometric_breaks(-10, min(hi, max(r0, s)))[:-1],
                                         np.linspace(min(hi, max(r0, s)), hi, 9)])
            else:
                breaks = np.linspace(lo, hi, 17)
            rho, wr = gl_nodes(breaks, 16 * level)
            prof = f.radial(rho) if r0 > 0 else f.radial(rho)
            dens = rho / Ti * np.exp(-((rho - r0) ** 2) / (2 * Ti)) * np.asarray(bessel_i_scaled(0.0, r0 * rho / Ti))
            out[i] = np.dot(wr, prof * dens)
        return out if out.size > 1 else float(out[0])
    # non-radial: polar coordinates around z0
    v, wv = gl_nodes(np.linspace(0.0, 9.0, 19), 16 * level)
    n_th = 256 * level
    th = 2.0 * np.pi * np.arange(n_th) / n_th
    out = np.empty(T.size)
    for i, Ti in enumerate(T):
        pts = z0c + math.sqrt(Ti) * v[:, None] * np.exp(1j * th)[None, :]
        avg = f(pts).mean(axis=1)
        out[i] = np.dot(wv, v * np.exp(-v * v / 2.0) * avg)
    return out if out.size > 1 else float(out[0])


def _h_table(f: TestFunction, t: float, level: int = 1):
    """Spline in log r of H(r) = (P_{2r} f)(0) = int 2 v e^{-v^2} fbar(2 sqrt(r) v) dv."""
    lr = np.linspace(math.log(t) - 42.0, math.log(t) + 0.5, 1000 * level)
    r = np.exp(lr)
    v, wv = gl_nodes(np.concatenate([_geometric_breaks(-10, 0.5)[:-1], np.linspace(0.5, 7.0, 14)]), 16 * level)
    prof = f.radial((2.0 * np.sqrt(r)[:, None] * v[None, :]).ravel()).reshape(r.size, v.size)
    H = prof @ (wv * 2.0 * v * np.exp(-v * v))
    cs = CubicSpline(lr, H, extrapolate=False)
    lo_slope = (H[1] - H[0]) / (lr[1] - lr[0])

    def h(rr):
        rr = np.asarray(rr, float)
        lrr = np.log(np.maximum(rr, 1e-300))
        out = cs(np.clip(lrr, lr[0], lr[-1]))
        below = lrr < lr[0]
        return np.where(below, H[0] + lo_slope * (lrr - lr[0]), out)

    return h


def ring_functional(beta: float, t: float, f: TestFunction, level: int = 1) -> float:
    """int ring_p(beta, t, z) f(z) dz = int_0^t s^beta(tau) (P_{2(t-tau)} f)(0) dtau."""
    if not (beta > 0 and t > 0):
        raise DomainError("ring_functional requires beta > 0 and t > 0")
    H = _h_table(f, t, level)
    return s_convolve(beta, t, H, level)


def semigroup_apply(beta: float, t: float, f: TestFunction, z0, level: int = 1) -> float:
    """P^beta_t f(z0) for z0 != 0; for z0 = 0 returns the ring functional."""
    if not (beta > 0 and t > 0):
        raise DomainError("semigroup_apply requires beta > 0 and t > 0")
    z0c = _cz(z0)
    if z0c == 0:
        return ring_functional(beta, t, f, level)
    free = heat_apply(f, z0c, 2.0 * t, level)
    H = _h_table(f, t, level)
    a2 = abs(z0c) ** 2
    s, c, ws = _sigma_nodes(level)

    def M(r):
        r = np.asarray(r, float)[:, None]
        vals = _heat_r2(a2, 2.0 * r * s) * H(r * c)
        return r[:, 0] * (vals @ ws)

    return float(free + s_convolve(beta, t, M, level))


def besab_marginal(beta: float, z0, t: float, f: TestFunction, level: int = 1,
                   literal_weight: bool = False) -> float:
    """E[f(Z_t)] for the planar beta-down process started at z0.

    The weight is f_beta(z) = f(z/sqrt 2) K_0(sqrt(beta)|z|), the form implied by
    the measure-change representation of P^beta_t.  ``literal_weight=True``
    uses K_0(sqrt(2 beta)|z|) instead; that variant does not integrate to 1
    and is kept only to document the discrepancy.
    """
    if not (beta > 0 and t > 0):
        raise DomainError("besab_marginal requires beta > 0 and t > 0")
    kb = math.sqrt(2.0 * beta) if literal_weight else math.sqrt(beta)

    def fb_eval(z):
        az = np.abs(z)
        k = np.where(az > 0, bessel_k(0.0, np.maximum(kb * az, 1e-300)), np.inf)
        return f(z / math.sqrt(2.0)) * k

    fb = TestFunction(fb_eval, math.inf, f.radial_flag, f"{f.name}_beta")
    z0c = _cz(z0)
    if z0c == 0:
        return math.exp(-beta * t) / (2.0 * math.pi) * ring_functional(beta, t, fb, level)
    pref = math.exp(-beta * t) / bessel_k(0.0, math.sqrt(2.0 * beta) * abs(z0c))
    return pref * semigroup_apply(beta, t, fb, math.sqrt(2.0) * z0c, level)


# ----------------------------------------------------------------------------
# hitting times


def gig_density(beta: float, x0: float, t, alpha: float = 0.0):
    """Density of the first hitting time of 0 under the beta-down law from |z| = x0.

    alpha = 0: exp(-beta t - x0^2/(2t)) / (2 K_0(sqrt(2 beta) x0) t).
    General alpha: t^(-alpha-1) exp(-beta t - x0^2/(2t)) normalised.
    """
    if not (beta > 0 and x0 > 0):
        raise DomainError("gig_density requires beta > 0 and x0 > 0")
    t = np.asarray(t, float)
    if np.any(t <= 0):
        raise DomainError("gig_density requires t > 0")
    sb = math.sqrt(2.0 * beta)
    # int t^{-a-1} e^{-beta t - c/t} dt = 2 (c/beta)^{-a/2} K_a(2 sqrt(beta c)), c = x0^2/2
    log_norm = math.log(2.0) - 0.5 * alpha * math.log(x0 * x0 / (2.0 * beta)) + log_bessel_k(alpha, sb * x0)
    out = np.exp(-(alpha + 1.0) * np.log(t) - beta * t - x0 * x0 / (2.0 * t) - log_norm)
    return float(out) if out.ndim == 0 else out


def gig_cdf(beta: float, x0: float, t, alpha: float = 0.0):
    """CDF of gig_density by cumulative Gauss-Legendre quadrature on a log-time grid."""
    t = np.asarray(t, float)
    # the density in log t is smooth; integrate on panels in s = log t
    mode_scale = x0 * x0
    lo, hi = math.log(mode_scale) - 12.0, math.log(max(mode_scale, 1.0) + 60.0 / beta)
    edges = np.linspace(lo, hi, 801)
    s, ws = gl_nodes(edges, 8)
    dens = np.asarray(gig_density(beta, x0, np.exp(s), alpha)) * np.exp(s)
    cum = np.concatenate([[0.0], np.cumsum((dens * ws).reshape(-1, 8).sum(axis=1))])
    cs = CubicSpline(edges, cum)
    lt = np.log(np.maximum(t, 1e-300))
    out = np.where(lt <= lo, 0.0, np.where(lt >= hi, 1.0, cs(np.clip(lt, lo, hi))))
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def hitting_laplace(alpha: float, beta: float, q: float, x0: float) -> float:
    """E[exp(-q T_0)] from x0 under the beta-down law (beta = 0: plain BES(-alpha))."""
    if not (0.0 <= alpha < 0.5):
        raise DomainError("alpha must lie in [0, 1/2)")
    if not (beta >= 0 and q > 0 and x0 >= 0):
        raise DomainError("hitting_laplace requires beta >= 0, q > 0, x0 >= 0")
    if beta == 0.0:
        if alpha == 0.0:
            raise DomainError("beta = 0 requires alpha > 0")
        if x0 == 0.0:
            return 1.0
        return 2.0 ** (1.0 - alpha) / math.gamma(alpha) * hat_k(alpha, math.sqrt(2.0 * q) * x0)
    if x0 == 0.0:
        if alpha == 0.0:
            raise DomainError("the law from 0 is degenerate at alpha = 0; use x0 > 0")
        return 1.0
    if alpha == 0.0:
        return math.exp(log_bessel_k(0.0, math.sqrt(2.0 * (beta + q)) * x0)
                        - log_bessel_k(0.0, math.sqrt(2.0 * beta) * x0))
    return hat_k(alpha, math.sqrt(2.0 * (beta + q)) * x0) / hat_k(alpha, math.sqrt(2.0 * beta) * x0)


# ----------------------------------------------------------------------------
# BES(-alpha) densities and local time


def bes_density(alpha: float, t, x, y, killed: bool = False):
    """Transition density of BES(-alpha) reflected at 0 (or killed at 0)."""
    if not (0.0 < alpha < 1.0):
        raise DomainError("bes_density requires 0 < alpha < 1")
    t, x, y = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float), np.asarray(y, float))
    if np.any(t <= 0) or np.any(x < 0) or np.any(y <= 0):
        raise DomainError("bes_density requires t > 0, x >= 0, y > 0")
    out = np.empty(t.shape)
    zero = x == 0
    if np.any(zero):
        tz, yz = t[zero], y[zero]
        out[zero] = 0.0 if killed else (2.0**alpha / (tz ** (1.0 - alpha) * math.gamma(1.0 - alpha))
                                         * yz ** (1.0 - 2.0 * alpha) * np.exp(-yz * yz / (2.0 * tz)))
    pos = ~zero
    if np.any(pos):
        tp, xp, yp = t[pos], x[pos], y[pos]
        z = xp * yp / tp
        nu = alpha if killed else -alpha
        out[pos] = (xp**alpha * yp ** (1.0 - alpha) / tp * np.exp(-((xp - yp) ** 2) / (2.0 * tp))
                    * np.asarray(bessel_i_scaled(nu, z)))
    return float(out) if out.ndim == 0 else out


def _check_lt_alpha(alpha, params):
    if not (0.0 < alpha < 1.0):
        raise DomainError("local-time laws require 0 < alpha < 1")
    if params is not None and abs(params.alpha - alpha) > 0:
        raise DomainError("alpha disagrees with params.alpha")


def lt_density(alpha: float, params: ModelParams | None, x0: float, t):
    """C_alpha 2^alpha / (t^(1-alpha) Gamma(1-alpha)) exp(-x0^2/(2t)): density of dE[L_t]/dt."""
    _check_lt_alpha(alpha, params)
    c_alpha = math.gamma(1.0 - alpha) / (2.0 * math.pi)
    t = np.asarray(t, float)
    if np.any(t <= 0):
        raise DomainError("lt_density requires t > 0")
    out = c_alpha * 2.0**alpha / (t ** (1.0 - alpha) * math.gamma(1.0 - alpha)) * np.exp(-x0 * x0 / (2.0 * t))
    return float(out) if out.ndim == 0 else out


def lt_laplace(alpha: float, params: ModelParams | None, lam: float, x0: float) -> float:
    """E_x0 int_0^inf e^{-lam t} dL_t."""
    _check_lt_alpha(alpha, params)
    if not lam > 0:
        raise DomainError("lam must be positive")
    c_prime = math.pi * 2.0 ** (1.0 - alpha) / math.gamma(alpha)
    base = 1.0 / (c_prime * lam**alpha)
    if x0 == 0.0:
        return base
    return base * 2.0 ** (1.0 - alpha) / math.gamma(alpha) * hat_k(alpha, math.sqrt(2.0 * lam) * x0)


def mittag_leffler(a: float, z: float) -> float:
    """E_a(z) = sum_k z^k / Gamma(a k + 1) for z >= 0."""
    if not (a > 0 and z >= 0):
        raise DomainError("mittag_leffler requires a > 0 and z >= 0")
    if z == 0:
        return 1.0
    lz = math.log(z)
    terms = []
    k = 0
    while True:
        lt = k * lz - math.lgamma(a * k + 1.0)
        terms.append(lt)
        if k > 5 and lt < max(terms) - 40.0:
            break
        k += 1
    m = max(terms)
    return math.exp(m) * math.fsum(math.exp(x - m) for x in terms)


def lt_exp_moment(params: ModelParams, x0: float, t: float, c: float | None = None) -> float:
    """E_x0[exp(c L_t)] for BES(-alpha); c defaults to Lambda_alpha.

    From 0 the law of L_t is Mittag-Leffler: E_0 e^{c L_t} = E_alpha((c/C*) t^alpha).
    From x0 > 0 the first hitting time is x0^2/(2G), G ~ Gamma(alpha).
    """
    a = params.alpha
    if not 0.0 < a < 0.5:
        raise DomainError("lt_exp_moment requires 0 < alpha < 1/2")
    c = params.lambda_alpha if c is None else float(c)
    k = c / params.c_star
    if x0 == 0.0:
        return mittag_leffler(a, k * t**a)
    gmin = x0 * x0 / (2.0 * t)  # hit before t iff G > gmin

    def integrand(g):
        return math.exp((a - 1.0) * math.log(g) - g - math.lgamma(a)) * mittag_leffler(a, k * (t - x0 * x0 / (2 * g)) ** a)

    # P(G <= gmin) via the regularised incomplete gamma
    p_no_hit = float(gammainc(a, gmin))
    val, _ = integrate.quad(integrand, gmin, np.inf, limit=400, epsabs=1e-13, epsrel=1e-11)
    return p_no_hit + val


def kappa_normalization(alpha: float, eps: float) -> float:
    """int_0^inf kappa_eps(y) y^(1-2 alpha) / C_alpha dy by quadrature in y (equals 1)."""
    if not (0.0 <= alpha < 0.5 and eps > 0):
        raise DomainError("kappa_normalization requires alpha in [0,1/2), eps > 0")
    c_alpha = math.gamma(1.0 - alpha) / (2.0 * math.pi)

    def f(y):
        kap = 2.0 * c_alpha * (1.0 - alpha) * eps / (eps + y * y) ** (2.0 - alpha)
        return kap * y ** (1.0 - 2.0 * alpha) / c_alpha

    r = math.sqrt(eps)
    edges = [0.0, 0.1 * r, r, 10.0 * r, 1000.0 * r]
    parts = [integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0] for lo, hi in zip(edges, edges[1:])]
    parts.append(integrate.quad(f, edges[-1], np.inf, epsabs=0, epsrel=1e-13, limit=200)[0])
    return math.fsum(parts)


# ----------------------------------------------------------------------------
# resolvents


def laplace_numeric(fn: Callable[[np.ndarray], np.ndarray], lam: float, t_max: float,
                    t_min: float = 1e-12, n_panels: int = 60, n: int = 12) -> float:
    """int_0^inf e^{-lam t} fn(t) dt on log-spaced panels from t_min to t_max."""
    edges = np.concatenate([[0.0], np.logspace(math.log10(t_min), math.log10(t_max), n_panels)])
    t, w = gl_nodes(edges, n)
    vals = np.asarray(fn(t), float)
    return float(np.dot(w, np.exp(-lam * t) * vals))


def resolvent_u(alpha: float, lam: float, f: TestFunction, z, quad: QuadratureSpec | None = None) -> float:
    """U_lambda f(z) = int_0^inf e^{-lam t} E_z[f(Z_t)] dt for BES(-alpha) skew product.

    Quadrature over the radial transition density; at z = 0 only the
    radialization of f enters.  Non-radial f at z != 0 is not computed here.
    """
    if not 0.0 < alpha < 0.5:
        raise DomainError("resolvent_u requires 0 < alpha < 1/2")
    if not lam > 0:
        raise DomainError("lam must be positive")
    quad = quad or QuadratureSpec()
    zc = _cz(z)
    x = abs(zc)
    if x > 0 and not f.radial_flag:
        raise NotImplementedError("non-radial f at z != 0 is only available by Monte Carlo")
    lvl = quad.level
    t_max = 46.0 / lam
    edges_t = np.concatenate([[0.0], np.logspace(-12, math.log10(t_max), 70)])
    t, wt = gl_nodes(edges_t, 10 * lvl)
    y_max = quad.truncation_radius or (x + 12.0 * math.sqrt(t_max))
    ybreaks = np.concatenate([_geometric_breaks(-10, min(1.0, y_max))[:-1], np.linspace(min(1.0, y_max), y_max, 60)])
    if x > 0:
        ybreaks = np.unique(np.concatenate([ybreaks, [x]]))
    y, wy = gl_nodes(ybreaks, 10 * lvl)
    prof = f.radial(y)
    total = 0.0
    for ti, wti in zip(t, wt):
        dens = np.asarray(bes_density(alpha, ti, x, y))
        total += wti * math.exp(-lam * ti) * np.dot(wy, dens * prof)
    return float(total)


def resolvent_closed_form(params: ModelParams, lam: float, f: TestFunction, z0,
                          quad: QuadratureSpec | None = None) -> float:
    """Resolvent of the planar process tilted by exp(Lambda_alpha L_t), for lam > beta."""
    a, b = params.alpha, params.beta
    if not 0.0 < a < 0.5:
        raise DomainError("resolvent_closed_form requires 0 < alpha < 1/2")
    if not lam > b:
        raise DomainError("resolvent_closed_form requires lam > beta")
    x = abs(PlanarPoint.of(z0))
    if f.constant_value is not None:
        u0 = uz = f.constant_value / lam
    else:
        u0 = resolvent_u(a, lam, f, 0.0, quad)
        uz = u0 if x == 0 else resolvent_u(a, lam, f, z0, quad)
    mult = 2.0 ** (1.0 - a) / math.gamma(a) * b**a / (lam**a - b**a)
    return uz + hat_k(a, math.sqrt(2.0 * lam) * x) * mult * u0


def s_beta_laplace_numeric(beta: float, lam: float) -> float:
    """int_0^inf e^{-lam tau} s^beta(tau) dtau by adaptive quadrature of s_beta itself.

    On (0, 1) the map tau = exp(-e^v) turns the 1/(tau log^2 tau) end into an
    exponentially decaying tail; on (1, inf) the exponential factor is used.
    """
    if not lam > beta > 0:
        raise DomainError("requires lam > beta > 0")

    def f1(v):
        lt = -math.exp(v)
        return math.exp(-lam * math.exp(lt)) * tau_s_beta(beta, lt) * math.exp(v)

    a = integrate.quad(f1, -30.0, 60.0, limit=800, epsrel=1e-11, epsabs=0.0)[0]
    t_hi = 1.0 + 60.0 / (lam - beta)
    b = integrate.quad(lambda t: math.exp(-lam * t) * s_beta(beta, t), 1.0, t_hi, limit=400,
                       epsrel=1e-11, epsabs=0.0)[0]
    return a + b


def p_beta_laplace_numeric(beta: float, lam: float, z, zt, n_panels: int = 40, n: int = 8,
                           level: int = 1) -> float:
    """int_0^inf e^{-lam t} P^beta_t(z, zt) dt, by quadrature in t of p_beta."""
    if not lam > beta > 0:
        raise DomainError("requires lam > beta > 0")
    t_max = 40.0 / (lam - beta)
    return laplace_numeric(lambda ts: np.array([p_beta(beta, t, z, zt, level) for t in ts]),
                           lam, t_max, t_min=1e-8, n_panels=n_panels, n=n)


def dbg_resolvent_kernel(beta: float, lam: float, z, zt) -> float:
    """G_lambda(z - zt) + (4 pi / log(lam/beta)) G_lambda(z) G_lambda(zt)."""
    if not lam > beta > 0:
        raise DomainError("requires lam > beta > 0")
    zc, ztc = _cz(z), _cz(zt)
    return float(green_lambda(lam, zc - ztc) + 4.0 * math.pi / math.log(lam / beta)
                 * green_lambda(lam, zc) * green_lambda(lam, ztc))
