"""Radial SDE schemes, local-time functionals and the planar skew product.

All paths are driven by counter-based Philox substreams keyed by
(master_seed, purpose, path index), so a path is the same whichever worker
computes it and in whatever order.

Schemes
-------
full_truncation_euler, reflected_milstein
    Discretisations of X = rho^2 on a uniform grid.
drift_implicit_sqrt
    Implicit step for Y = sqrt(X); monotone in the state and in alpha, so
    coupled solutions keep their pathwise order exactly.
exact
    Exact grid sampling of (rho, L) for BES(-alpha), 0 < alpha < 1/2, built
    from the hitting time of 0, the conditional Bessel bridge law of the
    no-hit branch and the law of (L_u, g_u) started from 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numba as nb
import numpy as np
from scipy.special import roots_genlaguerre
from scipy.stats import geninvgauss

from .specfun import ModelParams, RatioTable, bessel_i_scaled

__all__ = [
    "ConfigError",
    "SimConfig",
    "RadialPath",
    "PlanarPath",
    "PathSummary",
    "ExactSummary",
    "CoupledStats",
    "substream",
    "simulate_besq",
    "simulate_besq_down",
    "local_time",
    "kappa_eps",
    "skew_product",
    "coupled_compare",
    "simulate_summary",
    "exact_summary",
    "lt_refinement",
    "zolotarev_a",
    "PURPOSES",
    "CLOCK_CAP",
]

PURPOSES = {"radial": 1, "angle": 2, "resample": 3, "hit": 4, "horizon": 5, "exact": 6}
CLOCK_CAP = 1e12
SCHEMES = ("full_truncation_euler", "reflected_milstein", "drift_implicit_sqrt", "exact")
_MODES = {"full_truncation_euler": 0, "reflected_milstein": 1, "drift_implicit_sqrt": 2}
HIT_RULES = ("gig_residual", "grid")
_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass
class SimConfig:
    """Simulation settings.

    ``eps_lt`` defaults to dt**0.7 and ``clock_floor`` to dt**2.  With
    ``hit_rule="gig_residual"`` the first time X drops below ``handoff*dt`` is
    completed by an exact draw of the remaining hitting time (strong Markov
    property); ``"grid"`` records the first grid time with X <= dt.
    """

    dt: float = 1e-4
    horizon: float = 1.0
    n_paths: int = 1000
    eps_lt: float | None = None
    master_seed: int = 0
    scheme: str = "full_truncation_euler"
    hit_rule: str = "gig_residual"
    handoff: float = 64.0
    clock_floor: float | None = None
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ConfigError("dt", "must be a positive number")
        if not (isinstance(self.horizon, (int, float)) and self.horizon > 0):
            raise ConfigError("horizon", "must be a positive number")
        if self.dt > self.horizon:
            raise ConfigError("dt", "must not exceed horizon")
        if not (isinstance(self.n_paths, (int, np.integer)) and self.n_paths > 0):
            raise ConfigError("n_paths", "must be a positive integer")
        if self.eps_lt is not None and not self.eps_lt > 0:
            raise ConfigError("eps_lt", "must be positive")
        if not (isinstance(self.master_seed, (int, np.integer)) and 0 <= self.master_seed <= _MASK64):
            raise ConfigError("master_seed", "must be an integer in [0, 2^64)")
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"must be one of {SCHEMES}")
        if self.hit_rule not in HIT_RULES:
            raise ConfigError("hit_rule", f"must be one of {HIT_RULES}")
        if not self.handoff >= 1.0:
            raise ConfigError("handoff", "must be >= 1")
        if self.clock_floor is not None and not self.clock_floor > 0:
            raise ConfigError("clock_floor", "must be positive")
        if not (isinstance(self.threads, (int, np.integer)) and self.threads >= 1):
            raise ConfigError("threads", "must be an integer >= 1")

    @property
    def eps(self) -> float:
        return self.eps_lt if self.eps_lt is not None else self.dt**0.7

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))

    @property
    def floor(self) -> float:
        return self.clock_floor if self.clock_floor is not None else self.dt * self.dt

    def replace(self, **kw) -> "SimConfig":
        return replace(self, **kw)


@dataclass
class RadialPath:
    times: np.ndarray
    x: np.ndarray
    rho: np.ndarray
    lt: np.ndarray
    t0_hit: float | None
    noise_id: tuple
    dw: np.ndarray | None = None
    alpha: float = 0.0
    eps: float = 0.0


@dataclass
class PlanarPath:
    """Planar path stored in polar form so that |z| equals rho exactly."""

    times: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    clock: np.ndarray
    zero_hits: list
    clock_diverged: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return self.rho * np.exp(1j * self.theta)

    @property
    def modulus(self) -> np.ndarray:
        return self.rho


@dataclass
class PathSummary:
    """Per-path end-of-horizon values of a bulk Euler run."""

    x_T: np.ndarray
    lt_kappa: np.ndarray
    lt_scale: np.ndarray
    t0_hit: np.ndarray  # nan when no hit was recorded
    clock_T: np.ndarray
    theta_T: np.ndarray
    n_zero: np.ndarray
    horizon: np.ndarray
    meta: dict = field(default_factory=dict)


@dataclass
class ExactSummary:
    rho_T: np.ndarray
    L_T: np.ndarray
    t0_hit: np.ndarray
    horizon: np.ndarray
    log_rb: np.ndarray  # log E[e^{c L_T} | everything except the Gamma factors]
    kac_sum: np.ndarray  # sum_k e^{c L_k} (e^{c dL_k} - 1)
    meta: dict = field(default_factory=dict)


@dataclass
class CoupledStats:
    min_gap: np.ndarray  # min_t (X_a1 - X_a2) per path
    sup_sq: np.ndarray  # sup_t |X_a1 - X_a2|^2 per path
    tol: float

    @property
    def order_ok(self) -> np.ndarray:
        return self.min_gap >= -self.tol

    @property
    def violation_fraction(self) -> float:
        return float(np.mean(~self.order_ok))

    @property
    def l2_sup(self) -> float:
        return float(np.mean(self.sup_sq))


# ----------------------------------------------------------------------------
# random streams


@lru_cache(maxsize=256)
def _purpose_key(master_seed: int, purpose: str) -> int:
    ss = np.random.SeedSequence([int(master_seed) & _MASK64, PURPOSES[purpose]])
    return int(ss.generate_state(1, np.uint64)[0])


def substream(master_seed: int, purpose: str, path: int) -> np.random.Generator:
    """Generator for one (seed, purpose, path) triple."""
    k0 = _purpose_key(int(master_seed), purpose)
    return np.random.Generator(np.random.Philox(key=np.array([k0, int(path)], dtype=np.uint64)))


def _map_paths(fn, paths, threads):
    paths = list(paths)
    if threads <= 1 or len(paths) < 2:
        return [fn(i) for i in paths]
    n_chunks = min(len(paths), threads * 4)
    chunks = [paths[j::n_chunks] for j in range(n_chunks)]
    out = {}
    with ThreadPoolExecutor(max_workers=threads) as ex:
        for chunk, res in zip(chunks, ex.map(lambda c: [fn(i) for i in c], chunks)):
            out.update(zip(chunk, res))
    return [out[i] for i in paths]


# ----------------------------------------------------------------------------
# drift tables


_DUMMY_TAB = (0.0, 1.0, np.zeros(2), 1.0, 1.0, np.zeros(2), 0.0)


@lru_cache(maxsize=32)
def _ratio_tab(alpha: float):
    t = RatioTable.build(alpha)
    l0 = float(t.log_nodes[0])
    dl = float(t.log_nodes[1] - t.log_nodes[0])
    u1 = float(t.lin_nodes[0])
    du = float(t.lin_nodes[1] - t.lin_nodes[0])
    return (l0, dl, t.log_vals, u1, du, t.lin_vals, float(t.small_coef))


@nb.njit(nogil=True, cache=True)
def _ratio_eval(u, alpha, tab):
    l0, dl, lvals, u1, du, linvals, small = tab
    if u >= u1:
        pos = (u - u1) / du
        i = int(pos)
        if i >= linvals.size - 1:
            return u + 0.5
        w = pos - i
        return linvals[i] * (1.0 - w) + linvals[i + 1] * w
    if u <= 0.0:
        return alpha
    lu = math.log(u)
    if lu < l0:
        if alpha == 0.0:
            return 1.0 / (-math.log(u / 2.0) - 0.5772156649015329)
        y = u ** (2.0 * alpha)
        # second power series of K_alpha; see specfun._small_x_ratio
        c2 = math.exp(math.lgamma(1.0 - alpha) - math.lgamma(alpha)) * 2.0 ** (-2.0 * alpha) / alpha
        return alpha + small * y / (1.0 - c2 * y)
    pos = (lu - l0) / dl
    i = int(pos)
    if i >= lvals.size - 1:
        i = lvals.size - 2
    w = pos - i
    return lvals[i] * (1.0 - w) + lvals[i + 1] * w


@nb.njit(nogil=True, cache=True)
def _drift(x, kind, alpha, beta, tab):
    if kind == 0:
        return 2.0 - 2.0 * alpha
    return 2.0 - 2.0 * _ratio_eval(math.sqrt(2.0 * beta * x), alpha, tab)


@nb.njit(nogil=True, cache=True)
def _advance(x, mu, dt, dw, milstein):
    if milstein:
        xn = x + mu * dt + 2.0 * math.sqrt(x) * dw + (dw * dw - dt)
        return abs(xn)
    xn = x + mu * dt + 2.0 * math.sqrt(x) * dw
    return xn if xn > 0.0 else 0.0


@nb.njit(nogil=True, cache=True)
def _y_drift(y, kind, alpha, beta, tab):
    # drift of Y = sqrt(X): (mu(X) - 1)/(2Y)
    return (_drift(y * y, kind, alpha, beta, tab) - 1.0) / (2.0 * y)


@nb.njit(nogil=True, cache=True)
def _implicit_step(x, dt, dw, kind, alpha, beta, tab):
    """Solve y - b(y) dt = sqrt(x) + dw for y > 0, return y^2.

    b is strictly decreasing, so the left side is increasing in y and the
    map from (x, dw) to the new state is monotone; b also decreases in alpha,
    which makes coupled solutions ordered in alpha at every step.
    """
    c = math.sqrt(x) + dw
    if kind == 0:
        y = 0.5 * (c + math.sqrt(c * c + 2.0 * (1.0 - 2.0 * alpha) * dt))
        return y * y
    # b(y) <= (1 - 2 alpha)/(2y) gives an upper bound for the root
    lo = 0.0
    hi = 0.5 * (abs(c) + c + math.sqrt(c * c + 2.0 * (1.0 - 2.0 * alpha) * dt)) + 1e-300
    # start from the root with the drift coefficient frozen at x
    k = _drift(x, kind, alpha, beta, tab) - 1.0
    disc = c * c + 2.0 * k * dt
    y = 0.5 * (c + math.sqrt(disc)) if disc > 0.0 else 0.0
    if not (0.0 < y < hi):
        y = 0.5 * hi
    for _ in range(80):
        f = y - _y_drift(y, kind, alpha, beta, tab) * dt - c
        if abs(f) <= 1e-15 * (abs(c) + y):
            break
        if f > 0.0:
            hi = y
        else:
            lo = y
        if hi - lo <= 1e-15 * hi:
            break
        h = 1e-7 * y
        fp = 1.0 - (_y_drift(y + h, kind, alpha, beta, tab) - _y_drift(y - h, kind, alpha, beta, tab)) * dt / (2.0 * h)
        y = y - f / fp
        if not (lo < y < hi):
            y = 0.5 * (lo + hi)
    return y * y


@nb.njit(nogil=True, cache=True)
def _step(x, dt, dw, mode, kind, alpha, beta, tab):
    if mode == 2:
        return _implicit_step(x, dt, dw, kind, alpha, beta, tab)
    return _advance(x, _drift(x, kind, alpha, beta, tab), dt, dw, mode == 1)


# ----------------------------------------------------------------------------
# Euler kernels


@nb.njit(nogil=True, cache=True)
def _euler_full(gr, x0, dt, n_steps, kind, alpha, beta, tab, mode, xs, dws):
    sq = math.sqrt(dt)
    x = x0
    xs[0] = x
    for k in range(n_steps):
        dw = sq * gr.standard_normal()
        x = _step(x, dt, dw, mode, kind, alpha, beta, tab)
        xs[k + 1] = x
        dws[k] = dw


@nb.njit(nogil=True, cache=True)
def _euler_summary(gr, ga, gs, x0, theta0, dt, n_steps, kind, alpha, beta, tab, mode,
                   eps, c_alpha, thr_pass, zero_level, floor, stop_at_pass, angle):
    sq = math.sqrt(dt)
    x = x0
    lk = 0.0
    msum = 0.0
    clock = 0.0
    theta = theta0
    nzero = 0
    diverged = False
    kcoef = 2.0 * c_alpha * (1.0 - alpha) * eps * dt
    t_pass = -1.0
    x_pass = -1.0
    if x0 <= thr_pass:
        t_pass = 0.0
        x_pass = x0
    steps = 0
    for k in range(n_steps):
        if stop_at_pass and t_pass >= 0.0:
            break
        dw = sq * gr.standard_normal()
        lk += kcoef / (eps + x) ** (2.0 - alpha)
        if alpha > 0.0 and x > 0.0:
            msum += x ** (alpha - 0.5) * dw
        inc = dt / max(x, floor)
        if angle:
            theta += math.sqrt(inc) * ga.standard_normal()
        if not diverged:
            clock += inc
            if clock >= 1e12:
                clock = 1e12
                diverged = True
        x = _step(x, dt, dw, mode, kind, alpha, beta, tab)
        steps += 1
        if t_pass < 0.0 and x <= thr_pass:
            t_pass = (k + 1) * dt
            x_pass = x
        if x <= zero_level:
            nzero += 1
            diverged = True
            clock = 1e12
            if angle:
                theta = -math.pi + 2.0 * math.pi * gs.random()
    return x, lk, msum, clock, theta, nzero, t_pass, x_pass, steps


@nb.njit(nogil=True, cache=True)
def _skew_angles(ga, gs, xs, dt, floor, zero_level, theta0, theta, clock, div):
    n = xs.size - 1
    th = theta0
    c = 0.0
    d = False
    theta[0] = th
    clock[0] = 0.0
    div[0] = False
    for k in range(n):
        x = xs[k]
        inc = dt / max(x, floor)
        th += math.sqrt(inc) * ga.standard_normal()
        if not d:
            c += inc
            if c >= 1e12:
                c = 1e12
                d = True
        if xs[k + 1] <= zero_level:
            d = True
            c = 1e12
            th = -math.pi + 2.0 * math.pi * gs.random()
        theta[k + 1] = th
        clock[k + 1] = c
        div[k + 1] = d


@nb.njit(nogil=True, cache=True)
def _coupled_kernel(gr, x0, dt, n_steps, alpha1, tab1, alpha2, tab2, beta, kind, mode):
    sq = math.sqrt(dt)
    x1 = x0
    x2 = x0
    gmin = 0.0
    smax = 0.0
    for k in range(n_steps):
        dw = sq * gr.standard_normal()
        x1 = _step(x1, dt, dw, mode, kind, alpha1, beta, tab1)
        x2 = _step(x2, dt, dw, mode, kind, alpha2, beta, tab2)
        d = x1 - x2
        if d < gmin:
            gmin = d
        if d * d > smax:
            smax = d * d
    return gmin, smax


@nb.njit(nogil=True, cache=True)
def _refine_kernel(gr, x0, dt_fine, n_fine, factors, epss, alpha, c_alpha, out):
    sq = math.sqrt(dt_fine)
    dw = np.empty(n_fine)
    for k in range(n_fine):
        dw[k] = sq * gr.standard_normal()
    for j in range(factors.size):
        m = factors[j]
        dt = dt_fine * m
        n = n_fine // m
        eps = epss[j]
        kcoef = 2.0 * c_alpha * (1.0 - alpha) * eps * dt
        x = x0
        lk = 0.0
        msum = 0.0
        sup = 0.0
        for k in range(n):
            w = 0.0
            for i in range(k * m, (k + 1) * m):
                w += dw[i]
            lk += kcoef / (eps + x) ** (2.0 - alpha)
            if x > 0.0:
                msum += x ** (alpha - 0.5) * w
            x = _advance(x, 2.0 - 2.0 * alpha, dt, w, False)
            ls = c_alpha * ((x**alpha - x0**alpha) / alpha - 2.0 * msum)
            g = abs(lk - ls)
            if g > sup:
                sup = g
        out[j] = sup


# ----------------------------------------------------------------------------
# local time


def kappa_eps(y, alpha: float, eps: float):
    """Mollifier 2 C_alpha (1-alpha) eps / (eps + y^2)^(2-alpha)."""
    c_alpha = math.gamma(1.0 - alpha) / (2.0 * math.pi)
    y = np.asarray(y, float)
    return 2.0 * c_alpha * (1.0 - alpha) * eps / (eps + y * y) ** (2.0 - alpha)


def local_time(path: RadialPath, method: str, params: ModelParams, eps: float | None = None):
    """Local-time series on the grid of ``path``.

    ``kappa_occupation`` integrates kappa_eps(rho) with the left-point rule;
    ``scale_formula`` uses the pathwise identity through rho^(2 alpha) and the
    stochastic integral against the stored noise increments.
    """
    a = params.alpha
    if method == "kappa_occupation":
        e = eps if eps is not None else path.eps
        dt = np.diff(path.times)
        inc = kappa_eps(path.rho[:-1], a, e) * dt
        return np.concatenate([[0.0], np.cumsum(inc)])
    if method == "scale_formula":
        if a <= 0.0:
            raise ValueError("scale_formula requires alpha > 0")
        if path.dw is None:
            raise ValueError("scale_formula needs the noise increments of an Euler path")
        x = path.x
        with np.errstate(divide="ignore"):
            integrand = np.where(x[:-1] > 0, x[:-1] ** (a - 0.5), 0.0)
        m = np.concatenate([[0.0], np.cumsum(integrand * path.dw)])
        return params.c_alpha * ((x**a - x[0] ** a) / a - 2.0 * m)
    raise ValueError(f"unknown local-time method {method!r}")


# ----------------------------------------------------------------------------
# hitting-time completion


def _residual_hit(alpha, beta, x_pass, gen):
    """Exact remaining time to 0 from X = x_pass."""
    if x_pass <= 0.0:
        return 0.0
    rho = math.sqrt(x_pass)
    if beta is None:
        if alpha == 0.0:
            return math.inf
        return x_pass / (2.0 * gen.gamma(alpha))
    b = rho * math.sqrt(2.0 * beta)
    return float(geninvgauss.rvs(-alpha, b, scale=rho / math.sqrt(2.0 * beta), random_state=gen))


def _t0_from_pass(alpha, beta, cfg, t_pass, x_pass, path):
    if t_pass < 0.0:
        return math.nan
    if cfg.hit_rule == "grid":
        return t_pass
    r = _residual_hit(alpha, beta, x_pass, substream(cfg.master_seed, "hit", path))
    return t_pass + r if math.isfinite(r) else math.nan


def _thresholds(cfg):
    thr = cfg.dt if cfg.hit_rule == "grid" else cfg.handoff * cfg.dt
    return thr, cfg.dt


def _check_alpha(alpha):
    if not (0.0 <= alpha < 0.5):
        raise ValueError(f"alpha must lie in [0, 1/2), got {alpha}")


def _radial_path(alpha, beta, x0, cfg, substream_id):
    _check_alpha(alpha)
    if x0 < 0:
        raise ValueError("x0 must be nonnegative")
    if cfg.scheme == "exact":
        if beta is not None:
            raise ConfigError("scheme", "exact scheme is available only without the beta tilt")
        return _exact_radial_path(alpha, x0, cfg, substream_id)
    n = cfg.n_steps
    kind = 0 if beta is None else 1
    tab = _DUMMY_TAB if beta is None else _ratio_tab(float(alpha))
    xs = np.empty(n + 1)
    dws = np.empty(n)
    gr = substream(cfg.master_seed, "radial", substream_id)
    _euler_full(gr, float(x0) ** 2, cfg.dt, n, kind, float(alpha), float(beta or 0.0), tab,
                _MODES[cfg.scheme], xs, dws)
    times = np.arange(n + 1) * cfg.dt
    thr, _ = _thresholds(cfg)
    hit = np.nonzero(xs <= thr)[0]
    if hit.size:
        t0 = _t0_from_pass(alpha, beta, cfg, float(times[hit[0]]), float(xs[hit[0]]), substream_id)
    else:
        t0 = math.nan
    eps = cfg.eps
    c_alpha = math.gamma(1.0 - alpha) / (2.0 * math.pi)
    kc = 2.0 * c_alpha * (1.0 - alpha) * eps * cfg.dt
    lt = np.concatenate([[0.0], np.cumsum(kc / (eps + xs[:-1]) ** (2.0 - alpha))])
    return RadialPath(times, xs, np.sqrt(xs), lt, None if math.isnan(t0) else t0,
                      (int(cfg.master_seed), "radial", int(substream_id)), dws, float(alpha), eps)


def simulate_besq(alpha: float, x0: float, cfg: SimConfig, substream: int = 0) -> RadialPath:
    """Path of X = rho^2 for BESQ(-alpha) started at rho = x0."""
    return _radial_path(alpha, None, x0, cfg, substream)


def simulate_besq_down(alpha: float, beta: float, x0: float, cfg: SimConfig, substream: int = 0) -> RadialPath:
    """Path of X = rho^2 for the beta-down process, drift 2 - 2 R_alpha(sqrt(2 beta X))."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return _radial_path(alpha, float(beta), x0, cfg, substream)


def skew_product(radial: RadialPath, cfg: SimConfig, substream: int = 0, theta0: float = 0.0) -> PlanarPath:
    """Attach a time-changed circular Brownian angle to a radial path.

    The clock accumulates dt/max(rho^2, floor); at each zero event (X <= dt on
    the grid) the clock is flagged divergent and the angle is redrawn
    uniformly on [-pi, pi).
    """
    n = radial.x.size
    theta = np.empty(n)
    clock = np.empty(n)
    div = np.empty(n, dtype=np.bool_)
    ga = substream_gen(cfg, "angle", substream)
    gs = substream_gen(cfg, "resample", substream)
    _skew_angles(ga, gs, radial.x, cfg.dt, cfg.floor, cfg.dt, float(theta0), theta, clock, div)
    hits = [float(radial.times[k]) for k in range(1, n) if radial.x[k] <= cfg.dt]
    clock = np.where(div, np.inf, clock)
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return PlanarPath(radial.times, radial.rho, theta, clock, hits, div)


def substream_gen(cfg: SimConfig, purpose: str, path: int) -> np.random.Generator:
    return substream(cfg.master_seed, purpose, path)


def simulate_summary(alpha: float, beta: float | None, x0: float, cfg: SimConfig, *,
                     theta0: float = 0.0, angle: bool = False, stop_at_hit: bool = False,
                     horizons: np.ndarray | None = None, paths=None,
                     record_hit: bool = True) -> PathSummary:
    """Bulk Euler run returning end-of-horizon values for each path.

    ``horizons`` optionally gives a per-path horizon (rounded to the grid),
    which is how randomized-horizon estimators are run.  ``record_hit=False``
    skips the exact hitting-time completion (t0_hit is then the grid passage time).
    """
    _check_alpha(alpha)
    if cfg.scheme == "exact":
        raise ConfigError("scheme", "use exact_summary for the exact scheme")
    paths = range(cfg.n_paths) if paths is None else paths
    kind = 0 if beta is None else 1
    tab = _DUMMY_TAB if beta is None else _ratio_tab(float(alpha))
    thr, zero_level = _thresholds(cfg)
    c_alpha = math.gamma(1.0 - alpha) / (2.0 * math.pi)
    eps = cfg.eps
    mode = _MODES[cfg.scheme]
    x_init = float(x0) ** 2

    def one(i):
        n = cfg.n_steps if horizons is None else max(1, int(round(horizons[i] / cfg.dt)))
        gr = substream(cfg.master_seed, "radial", i)
        ga = substream(cfg.master_seed, "angle", i)
        gs = substream(cfg.master_seed, "resample", i)
        r = _euler_summary(gr, ga, gs, x_init, float(theta0), cfg.dt, n, kind, float(alpha),
                           float(beta or 0.0), tab, mode, eps, c_alpha, thr, zero_level,
                           cfg.floor, stop_at_hit, angle)
        x, lk, msum, clock, theta, nzero, t_pass, x_pass, steps = r
        if record_hit:
            t0 = _t0_from_pass(alpha, beta, cfg, t_pass, x_pass, i)
        else:
            t0 = t_pass if t_pass >= 0.0 else math.nan
        # the scale-function formula holds for BESQ(-alpha) only
        ls = c_alpha * ((x**alpha - x_init**alpha) / alpha - 2.0 * msum) if alpha > 0 and beta is None else math.nan
        return x, lk, ls, t0, clock, theta, nzero, steps * cfg.dt

    res = np.array(_map_paths(one, paths, cfg.threads), dtype=float).reshape(-1, 8)
    theta = np.mod(res[:, 5] + np.pi, 2.0 * np.pi) - np.pi
    clock = np.where(res[:, 4] >= CLOCK_CAP, np.inf, res[:, 4])
    return PathSummary(res[:, 0], res[:, 1], res[:, 2], res[:, 3], clock, theta,
                       res[:, 6].astype(np.int64), res[:, 7],
                       {"alpha": alpha, "beta": beta, "x0": x0, "dt": cfg.dt, "eps": eps})


# ----------------------------------------------------------------------------
# pathwise comparison and local-time refinement


def coupled_compare(alpha1: float, alpha2: float, beta: float, x0: float, cfg: SimConfig,
                    tol: float | None = None) -> CoupledStats:
    """Run two beta-down solutions on identical noise and record their gap."""
    _check_alpha(alpha1)
    _check_alpha(alpha2)
    if alpha1 > alpha2:
        raise ValueError("coupled_compare requires alpha1 <= alpha2")
    t1, t2 = _ratio_tab(float(alpha1)), _ratio_tab(float(alpha2))
    mode = _MODES[cfg.scheme]

    def one(i):
        gr = substream(cfg.master_seed, "radial", i)
        return _coupled_kernel(gr, float(x0) ** 2, cfg.dt, cfg.n_steps, float(alpha1), t1,
                               float(alpha2), t2, float(beta), 1, mode)

    res = np.array(_map_paths(one, range(cfg.n_paths), cfg.threads))
    return CoupledStats(res[:, 0], res[:, 1], 5.0 * cfg.dt if tol is None else float(tol))


def lt_refinement(alpha: float, x0: float, cfg: SimConfig, factors=(100, 10, 1)) -> np.ndarray:
    """sup_t |L^kappa - L^scale| for BESQ(-alpha) on nested grids.

    ``cfg.dt`` is the finest step; grid j uses step factors[j]*dt built from
    sums of the fine Brownian increments, with eps = (step)^0.7.
    Returns an array of shape (n_paths, len(factors)).
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("lt_refinement requires 0 < alpha < 1/2")
    factors = np.asarray(factors, dtype=np.int64)
    n_fine = cfg.n_steps
    if np.any(n_fine % factors):
        raise ConfigError("horizon", "horizon/dt must be divisible by every refinement factor")
    epss = (cfg.dt * factors.astype(float)) ** 0.7
    c_alpha = math.gamma(1.0 - alpha) / (2.0 * math.pi)

    def one(i):
        out = np.empty(factors.size)
        _refine_kernel(substream(cfg.master_seed, "radial", i), float(x0) ** 2, cfg.dt, n_fine,
                       factors, epss, float(alpha), c_alpha, out)
        return out

    return np.array(_map_paths(one, range(cfg.n_paths), cfg.threads))


# ----------------------------------------------------------------------------
# exact transitions of BES(-alpha)


@nb.njit(nogil=True, cache=True)
def zolotarev_a(u, a):
    """Zolotarev's function for the one-sided a-stable law."""
    return (math.sin(a * u) ** a * math.sin((1.0 - a) * u) ** (1.0 - a) / math.sin(u)) ** (1.0 / (1.0 - a))


@lru_cache(maxsize=32)
def _bessel_ratio_tab(alpha: float):
    # I_alpha / I_{-alpha} on a log grid
    lz = np.linspace(math.log(1e-8), math.log(50.0), 4000)
    z = np.exp(lz)
    vals = np.asarray(bessel_i_scaled(alpha, z)) / np.asarray(bessel_i_scaled(-alpha, z))
    small = math.exp(math.lgamma(1.0 - alpha) - math.lgamma(1.0 + alpha))
    return (float(lz[0]), float(lz[1] - lz[0]), vals, small)


@nb.njit(nogil=True, cache=True)
def _bessel_ratio(z, a, rt):
    lz0, dlz, vals, small = rt
    if z <= 0.0:
        return 0.0
    l = math.log(z)
    if l < lz0:
        return small * (z / 2.0) ** (2.0 * a)
    pos = (l - lz0) / dlz
    i = int(pos)
    if i >= vals.size - 1:
        return 1.0
    w = pos - i
    return vals[i] * (1.0 - w) + vals[i + 1] * w


@nb.njit(nogil=True, cache=True)
def _from_zero(g, u, a, c_star):
    # (rho_u, L_u, g_u, A(U)) for BES(-a) started at 0
    gl = u * g.beta(a, 1.0 - a)
    a0 = (a**a * (1.0 - a) ** (1.0 - a)) ** (1.0 / (1.0 - a))
    while True:
        uu = math.pi * g.random()
        au = zolotarev_a(uu, a)
        if g.random() < (a0 / au) ** (1.0 - a):
            break
    e = g.gamma(2.0 - a)
    ell = gl**a / c_star * (e / au) ** (1.0 - a)
    rho = math.sqrt(u - gl) * math.sqrt(2.0 * g.exponential())
    return rho, ell, gl, au


@nb.njit(nogil=True, cache=True)
def _interp_uniform(x, x0, dx, vals):
    pos = (x - x0) / dx
    i = int(pos)
    if i >= vals.size - 1:
        i = vals.size - 2
    if i < 0:
        i = 0
    w = pos - i
    return vals[i] * (1.0 - w) + vals[i + 1] * w


@nb.njit(nogil=True, cache=True)
def _exact_step(g, x, h, a, c_star, rt):
    # returns (rho_h, dL, g within the post-hit window, A(U), hit time in step or -1)
    if x <= 0.0:
        rho, ell, gl, au = _from_zero(g, h, a, c_star)
        return rho, ell, gl, au, 0.0
    t0 = x * x / (2.0 * g.gamma(a))
    if t0 < h:
        rho, ell, gl, au = _from_zero(g, h - t0, a, c_star)
        return rho, ell, gl, au, t0
    while True:
        y = math.sqrt(h * g.noncentral_chisquare(2.0 - 2.0 * a, x * x / h))
        if g.random() < _bessel_ratio(x * y / h, a, rt):
            return y, 0.0, 0.0, 1.0, -1.0


@nb.njit(nogil=True, cache=True)
def _exact_kernel(g, rho0, h, n_steps, a, c_star, rt, rb_c, ptab, kac_c, rhos, ls):
    k0, dk, lphi = ptab
    x = rho0
    L = 0.0
    t0 = -1.0
    logrb = 0.0
    kac = 0.0
    store = rhos.size > 0
    if store:
        rhos[0] = x
        ls[0] = 0.0
    for k in range(n_steps):
        y, dl, gl, au, th = _exact_step(g, x, h, a, c_star, rt)
        if t0 < 0.0 and th >= 0.0:
            t0 = k * h + th
        if dl > 0.0:
            if rb_c > 0.0:
                kap = rb_c * gl**a / (c_star * au ** (1.0 - a))
                logrb += _interp_uniform(kap, k0, dk, lphi)
            if kac_c > 0.0:
                kac += math.exp(kac_c * L) * math.expm1(kac_c * dl)
        L += dl
        x = y
        if store:
            rhos[k + 1] = x
            ls[k + 1] = L
    return x, L, t0, logrb, kac


@lru_cache(maxsize=64)
def _phi_tab(alpha: float, kmax: float, n: int = 4001):
    """log E[exp(k E^(1-alpha))], E ~ Gamma(2-alpha), on a uniform k grid."""
    s, w = roots_genlaguerre(160, 1.0 - alpha)
    w = w / math.gamma(2.0 - alpha)
    ks = np.linspace(0.0, kmax, n)
    ex = ks[:, None] * s[None, :] ** (1.0 - alpha)
    m = ex.max(axis=1)
    vals = m + np.log(np.exp(ex - m[:, None]) @ w)
    return (0.0, float(ks[1] - ks[0]), vals)


def _exact_params(alpha):
    if not 0.0 < alpha < 0.5:
        raise ValueError("the exact scheme needs 0 < alpha < 1/2")
    c_star = math.pi * 2.0 ** (1.0 - alpha) / math.gamma(alpha)
    return c_star, _bessel_ratio_tab(float(alpha))


def _exact_radial_path(alpha, x0, cfg, substream_id):
    c_star, rt = _exact_params(alpha)
    n = cfg.n_steps
    rhos = np.empty(n + 1)
    ls = np.empty(n + 1)
    g = substream(cfg.master_seed, "exact", substream_id)
    _, _, t0, _, _ = _exact_kernel(g, float(x0), cfg.dt, n, float(alpha), c_star, rt, 0.0,
                                   (0.0, 1.0, np.zeros(2)), 0.0, rhos, ls)
    times = np.arange(n + 1) * cfg.dt
    return RadialPath(times, rhos**2, rhos, ls, None if t0 < 0 else t0,
                      (int(cfg.master_seed), "exact", int(substream_id)), None, float(alpha), cfg.eps)


def exact_summary(alpha: float, x0: float, cfg: SimConfig, *, rb_rate: float = 0.0,
                  kac_rate: float = 0.0, exp_horizon: float | None = None, paths=None) -> ExactSummary:
    """Exact grid sampling of (rho, L) for BES(-alpha) on many paths.

    ``rb_rate = c > 0`` also returns log E[e^{c L_T} | path skeleton], the
    conditional expectation over the Gamma factors of the local-time draws.
    ``kac_rate = c`` accumulates the Stieltjes sum of e^{c L} against dL.
    ``exp_horizon = lam`` replaces the fixed horizon by T ~ Exp(lam), sampled
    in a single exact step from the "horizon" substream.
    """
    c_star, rt = _exact_params(alpha)
    paths = range(cfg.n_paths) if paths is None else paths
    a = float(alpha)
    if rb_rate > 0.0:
        if exp_horizon is not None:
            raise ValueError("rb_rate needs a fixed horizon")
        a0 = (a**a * (1.0 - a) ** (1.0 - a)) ** (1.0 / (1.0 - a))
        kmax = rb_rate / c_star * cfg.dt**a / a0 ** (1.0 - a)
        ptab = _phi_tab(a, float(kmax * 1.001))
    else:
        ptab = (0.0, 1.0, np.zeros(2))
    empty = np.empty(0)

    def one(i):
        if exp_horizon is None:
            h, n = cfg.dt, cfg.n_steps
        else:
            h, n = float(substream(cfg.master_seed, "horizon", i).exponential(1.0 / exp_horizon)), 1
        g = substream(cfg.master_seed, "exact", i)
        r = _exact_kernel(g, float(x0), h, n, a, c_star, rt, float(rb_rate), ptab, float(kac_rate),
                          empty, empty)
        return r + (h * n,)

    res = np.array(_map_paths(one, paths, cfg.threads), dtype=float).reshape(-1, 6)
    t0 = np.where(res[:, 2] < 0, np.nan, res[:, 2])
    return ExactSummary(res[:, 0], res[:, 1], t0, res[:, 5], res[:, 3], res[:, 4],
                        {"alpha": a, "x0": x0, "dt": cfg.dt, "scheme": "exact"})
