"""Macdonald and modified Bessel functions, the Macdonald ratio and the drift.

K_nu is computed from the cosh integral

    K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt

with the trapezoidal rule (the integrand is even, analytic and decays doubly
exponentially, so the rule converges geometrically), switching to the Hankel
asymptotic series for x > 30.  I_nu uses its power series up to x = 30 and the
asymptotic series beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

__all__ = [
    "DomainError",
    "ModelParams",
    "gamma_fn",
    "bessel_k",
    "bessel_k_scaled",
    "log_bessel_k",
    "bessel_i",
    "bessel_i_scaled",
    "hat_k",
    "ratio_r",
    "drift_mu",
    "RatioTable",
]

LARGE_X = 30.0
_TRAP_NODES = 600
_EULER_GAMMA = 0.5772156649015329


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class ModelParams:
    """The pair (alpha, beta) and the constants derived from it.

    ``c_alpha`` is fixed to Gamma(1-alpha)/(2 pi); with that choice ``c_prime``
    coincides with ``c_star`` and the local time from 0 has Laplace functional
    1/(c_star lambda^alpha).
    """

    alpha: float
    beta: float
    c_star: float = field(init=False)
    lambda_alpha: float = field(init=False)
    c_alpha: float = field(init=False)
    c_prime: float = field(init=False)

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (0.0 <= a < 0.5):
            raise DomainError(f"alpha must lie in [0, 1/2), got {a}")
        if not b > 0.0:
            raise DomainError(f"beta must be positive, got {b}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        # 1/Gamma(0) = 0, so both constants vanish at alpha = 0
        c_star = 0.0 if a == 0.0 else math.pi * 2.0 ** (1.0 - a) / math.gamma(a)
        c_alpha = math.gamma(1.0 - a) / (2.0 * math.pi)
        c_prime = 0.0 if a == 0.0 else math.gamma(1.0 - a) / (c_alpha * 2.0**a * math.gamma(a))
        object.__setattr__(self, "c_star", c_star)
        object.__setattr__(self, "lambda_alpha", c_star * b**a)
        object.__setattr__(self, "c_alpha", c_alpha)
        object.__setattr__(self, "c_prime", c_prime)


def gamma_fn(x):
    """Gamma function for x > 0 (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("gamma_fn requires x > 0")
    if xa.ndim == 0:
        return math.gamma(float(xa))
    return np.vectorize(math.gamma, otypes=[float])(xa)


def _check_positive(x, name="x"):
    if np.any(~(np.asarray(x) > 0)):
        raise DomainError(f"{name} must be positive")


def _log_cosh(y):
    y = np.abs(y)
    return y + np.log1p(np.exp(-2.0 * y)) - math.log(2.0)


def _trap_cutoff(nu, x):
    """Upper limit in t beyond which the scaled integrand is < e^-40 of its peak."""
    anu = np.abs(nu)
    tp = np.arcsinh(anu / x)
    # log of scaled integrand: -x (cosh t - 1) + |nu| t (up to O(1))
    lp = -2.0 * x * np.sinh(tp / 2.0) ** 2 + anu * tp
    lo = tp
    hi = tp + np.log(2.0 * (80.0 + 60.0 * anu) / x + 2.0) + 2.0
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        val = -2.0 * x * np.sinh(mid / 2.0) ** 2 + anu * mid
        below = val < lp - 45.0
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return hi


def _log_k_scaled_trap(nu, x, chunk=4096):
    """log(e^x K_nu(x)) by the trapezoidal rule; nu, x 1-d arrays."""
    if x.size > chunk:
        return np.concatenate([_log_k_scaled_trap(nu[i:i + chunk], x[i:i + chunk])
                               for i in range(0, x.size, chunk)])
    tmax = _trap_cutoff(nu, x)
    h = tmax / _TRAP_NODES
    j = np.arange(_TRAP_NODES + 1)
    t = h[:, None] * j[None, :]
    logf = -2.0 * x[:, None] * np.sinh(t / 2.0) ** 2 + _log_cosh(nu[:, None] * t)
    logf[:, 0] -= math.log(2.0)
    m = logf.max(axis=1)
    s = np.exp(logf - m[:, None]).sum(axis=1)
    return m + np.log(s * h)


def _log_k_scaled_hankel(nu, x):
    """log(e^x K_nu(x)) from the Hankel expansion, x > 30."""
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(1, 120):
        new = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        grow = np.abs(new) > np.abs(term)
        done |= grow
        term = np.where(done, 0.0, new)
        total = total + term
        done |= np.abs(term) < 1e-17 * np.abs(total)
        if done.all():
            break
    return 0.5 * np.log(np.pi / (2.0 * x)) + np.log(total)


def log_bessel_k(nu, x):
    """log K_nu(x) for x > 0, valid far beyond the underflow point of K."""
    _check_positive(x)
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    shape = x_b.shape
    nu_f, x_f = nu_b.ravel(), x_b.ravel()
    out = np.empty(x_f.shape)
    big = x_f > LARGE_X
    if np.any(~big):
        out[~big] = _log_k_scaled_trap(nu_f[~big], x_f[~big])
    if np.any(big):
        out[big] = _log_k_scaled_hankel(nu_f[big], x_f[big])
    out = out - x_f
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def bessel_k_scaled(nu, x):
    """e^x K_nu(x)."""
    x_arr = np.asarray(x, float)
    return np.exp(np.asarray(log_bessel_k(nu, x)) + x_arr) if x_arr.ndim else math.exp(log_bessel_k(nu, x) + float(x))


def bessel_k(nu, x):
    """Macdonald function K_nu(x), x > 0, any real order."""
    res = np.exp(np.asarray(log_bessel_k(nu, x)))
    return float(res) if res.ndim == 0 else res


def _log_i_series(nu, x):
    # log I_nu(x) by the power series; all terms are positive for nu > -1
    half = x / 2.0
    log_t0 = nu * np.log(half) - gammaln(nu + 1.0)
    term = np.ones_like(x)
    total = np.ones_like(x)
    q = half * half
    for k in range(1, 400):
        term = term * q / (k * (k + nu))
        total = total + term
        if np.all(term < 1e-17 * total):
            break
    return log_t0 + np.log(total)


def _log_i_scaled_asym(nu, x):
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(1, 120):
        new = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        done |= np.abs(new) > np.abs(term)
        term = np.where(done, 0.0, new)
        total = total + term
        done |= np.abs(term) < 1e-17 * np.abs(total)
        if done.all():
            break
    return -0.5 * np.log(2.0 * np.pi * x) + np.log(total)


def _log_bessel_i_scaled(nu, x):
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    if np.any(nu_b <= -1.0):
        raise DomainError("bessel_i requires nu > -1")
    if np.any(x_b < 0.0):
        raise DomainError("bessel_i requires x >= 0")
    shape = x_b.shape
    nu_f, x_f = nu_b.ravel(), x_b.ravel()
    out = np.empty(x_f.shape)
    zero = x_f == 0.0
    big = x_f > LARGE_X
    mid = ~zero & ~big
    if np.any(mid):
        out[mid] = _log_i_series(nu_f[mid], x_f[mid]) - x_f[mid]
    if np.any(big):
        out[big] = _log_i_scaled_asym(nu_f[big], x_f[big])
    if np.any(zero):
        nz = nu_f[zero]
        out[zero] = np.where(nz == 0.0, 0.0, np.where(nz > 0.0, -np.inf, np.inf))
    return out.reshape(shape)


def bessel_i_scaled(nu, x):
    """e^{-x} I_nu(x) for nu > -1, x >= 0."""
    res = np.exp(_log_bessel_i_scaled(nu, x))
    return float(res) if res.ndim == 0 else res


def bessel_i(nu, x):
    """Modified Bessel function of the first kind, nu > -1, x >= 0."""
    res = np.exp(_log_bessel_i_scaled(nu, x) + np.asarray(x, float))
    return float(res) if res.ndim == 0 else res


def hat_k(nu, x):
    """x^nu K_nu(x), extended to x = 0 by 2^(nu-1) Gamma(nu) when nu > 0."""
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    if np.any(x_b < 0):
        raise DomainError("hat_k requires x >= 0")
    zero = x_b == 0.0
    if np.any(zero & (nu_b <= 0)):
        raise DomainError("hat_k(nu, 0) requires nu > 0")
    out = np.empty(x_b.shape)
    if np.any(zero):
        nz = nu_b[zero]
        out[zero] = np.exp((nz - 1.0) * math.log(2.0) + gammaln(nz))
    pos = ~zero
    if np.any(pos):
        xp = x_b[pos]
        out[pos] = np.exp(nu_b[pos] * np.log(xp) + log_bessel_k(nu_b[pos], xp))
    return float(out) if out.ndim == 0 else out


_SMALL_X = 1e-8


def ratio_r(alpha, x):
    """R_alpha(x) = alpha + x K_{1-alpha}(x)/K_alpha(x), with R_alpha(0) = alpha."""
    a_b, x_b = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(x, float))
    if np.any(a_b < 0) or np.any(x_b < 0):
        raise DomainError("ratio_r requires alpha >= 0 and x >= 0")
    out = np.array(a_b, dtype=float, copy=True)
    small = (x_b > 0) & (x_b < _SMALL_X)
    reg = x_b >= _SMALL_X
    if np.any(reg):
        xr, ar = x_b[reg], a_b[reg]
        out[reg] = ar + xr * np.exp(log_bessel_k(1.0 - ar, xr) - log_bessel_k(ar, xr))
    if np.any(small):
        xs, as_ = x_b[small], a_b[small]
        out[small] = as_ + _small_x_ratio(as_, xs)
    return float(out) if out.ndim == 0 else out


def _small_x_ratio(alpha, x):
    """x K_{1-alpha}(x)/K_alpha(x) for small x, relative error O(x^2 log x).

    Keeps both power series of K_alpha: with y = (x/2)^(2 alpha) the ratio is
    2 Gamma(1-alpha) y / (Gamma(alpha) + Gamma(-alpha) y).
    """
    res = np.empty_like(x)
    z = alpha == 0.0
    if np.any(z):
        res[z] = 1.0 / (-np.log(x[z] / 2.0) - _EULER_GAMMA)
    nz = ~z
    if np.any(nz):
        a = alpha[nz]
        y = (x[nz] / 2.0) ** (2.0 * a)
        # Gamma(-a)/Gamma(a) = -Gamma(1-a)/(a Gamma(a))
        g = np.exp(gammaln(1.0 - a) - gammaln(a))
        res[nz] = 2.0 * g * y / (1.0 - g * y / a)
    return res


def drift_mu(alpha, beta, x):
    """Drift coefficient 2 - 2 R_alpha(sqrt(2 beta |x|)) of the squared beta-down SDE."""
    if np.any(np.asarray(beta) <= 0):
        raise DomainError("beta must be positive")
    u = np.sqrt(2.0 * np.asarray(beta, float) * np.abs(np.asarray(x, float)))
    res = 2.0 - 2.0 * np.asarray(ratio_r(alpha, u))
    return float(res) if res.ndim == 0 else res


@dataclass
class RatioTable:
    """Piecewise-linear table of R_alpha(u) for use inside compiled loops.

    Nodes are log-spaced on [u_min, u_split] and uniform on [u_split, u_max].
    Below u_min the small-argument form is used; above u_max, R ~ u + 1/2.
    """

    alpha: float
    log_nodes: np.ndarray
    log_vals: np.ndarray
    lin_nodes: np.ndarray
    lin_vals: np.ndarray
    small_coef: float

    @classmethod
    def build(cls, alpha: float, u_min: float = 1e-12, u_split: float = 1.0,
              u_max: float = 200.0, n_log: int = 8000, n_lin: int = 40000) -> "RatioTable":
        log_nodes = np.linspace(math.log(u_min), math.log(u_split), n_log)
        lin_nodes = np.linspace(u_split, u_max, n_lin)
        log_vals = np.asarray(ratio_r(alpha, np.exp(log_nodes)))
        lin_vals = np.asarray(ratio_r(alpha, lin_nodes))
        if alpha > 0:
            small = math.exp((1 - 2 * alpha) * math.log(2.0) + math.lgamma(1 - alpha) - math.lgamma(alpha))
        else:
            small = 0.0
        return cls(float(alpha), log_nodes, log_vals, lin_nodes, lin_vals, small)

    def __call__(self, u):
        u = np.asarray(u, float)
        out = np.interp(np.log(np.maximum(u, 1e-300)), self.log_nodes, self.log_vals)
        lin = u >= self.lin_nodes[0]
        out = np.where(lin, np.interp(u, self.lin_nodes, self.lin_vals), out)
        tiny = u < math.exp(self.log_nodes[0])
        if np.any(tiny):
            out = np.where(tiny, self.alpha + np.asarray(_small_x_ratio(
                np.full(u.shape, self.alpha), np.maximum(u, 1e-300))), out)
        big = u > self.lin_nodes[-1]
        out = np.where(big, u + 0.5, out)
        return out
