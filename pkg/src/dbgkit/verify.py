"""Monte Carlo checks of the kernel identities against quadrature oracles.

Every check returns CheckReport objects (or a KSReport for distribution
distances).  Sums use math.fsum, which is exactly rounded and so independent
of the order in which path results arrive.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import kernels as K
from . import sde
from .kernels import PlanarPoint, TestFunction
from .specfun import ModelParams, bessel_k, hat_k, log_bessel_k

__all__ = [
    "MCEstimate",
    "CheckReport",
    "KSReport",
    "HeavyTailWarning",
    "mc_estimate",
    "estimate",
    "theta_density",
    "theta_terms",
    "theta_tail_bound",
    "angular_average",
    "check_theorem1",
    "check_ring",
    "check_rn_martingale",
    "check_resolvent",
    "check_falpha_limit",
    "check_gig",
    "check_kac",
    "check_compare",
    "check_local_time",
]

ESS_MIN = 1000
KURTOSIS_WARN = 50.0


class HeavyTailWarning(UserWarning):
    """Sample kurtosis of a weight is large; the standard error may be unreliable."""


@dataclass
class MCEstimate:
    mean: float
    stderr: float
    n: int
    elapsed: float = 0.0
    kurtosis: float = float("nan")
    ess: float = float("nan")


def estimate(samples, elapsed: float = 0.0) -> MCEstimate:
    """Mean, standard error, excess-free kurtosis and weight ESS of a sample."""
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    mean = math.fsum(x) / n
    d = x - mean
    m2 = math.fsum(d * d) / n
    var = m2 * n / (n - 1)
    stderr = math.sqrt(var / n)
    kurt = math.fsum(d**4) / n / (m2 * m2) if m2 > 0 else float("nan")
    s1 = math.fsum(np.abs(x))
    s2 = math.fsum(x * x)
    ess = s1 * s1 / s2 if s2 > 0 else float(n)
    return MCEstimate(mean, stderr, n, elapsed, kurt, ess)


def mc_estimate(sampler: Callable[[int, sde.SimConfig], float], n_paths: int, cfg: sde.SimConfig) -> MCEstimate:
    """Average a per-path functional over paths 0..n_paths-1 of the configured seed."""
    t0 = time.perf_counter()
    vals = sde._map_paths(lambda i: float(sampler(i, cfg)), range(n_paths), cfg.threads)
    return estimate(vals, time.perf_counter() - t0)


@dataclass
class CheckReport:
    name: str
    mc: MCEstimate
    oracle: float
    z_score: float
    passed: bool
    params: dict
    rel_tol: float = 0.0
    status: str = "pass"  # pass | fail | inconclusive | oracle-error
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class KSReport:
    name: str
    ks: float
    bound: float
    n: int
    passed: bool
    params: dict
    status: str = "pass"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _report(name, mc: MCEstimate, oracle: float, rel_tol: float, params: dict, *,
            weight_diag: MCEstimate | None = None, notes=None, extra=None) -> CheckReport:
    """Apply the pass rule |mean - oracle| <= max(3 stderr, rel_tol |oracle|)."""
    notes = list(notes or [])
    diff = mc.mean - oracle
    z = diff / mc.stderr if mc.stderr > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
    ok = abs(diff) <= max(3.0 * mc.stderr, rel_tol * abs(oracle))
    status = "pass" if ok else "fail"
    diag = weight_diag or mc
    if math.isfinite(diag.kurtosis) and diag.kurtosis > KURTOSIS_WARN:
        msg = f"{name}: sample kurtosis {diag.kurtosis:.1f} exceeds {KURTOSIS_WARN}"
        warnings.warn(msg, HeavyTailWarning, stacklevel=3)
        notes.append(msg)
    if math.isfinite(diag.ess) and diag.ess < ESS_MIN:
        notes.append(f"{name}: effective sample size {diag.ess:.0f} < {ESS_MIN}; no verdict")
        status = "inconclusive"
        ok = False
    return CheckReport(name, mc, float(oracle), float(z), bool(ok), params, rel_tol, status, notes, extra or {})


def _oracle(fn, name):
    try:
        return float(fn()), None
    except Exception as exc:  # report oracle failure separately from MC failure
        return math.nan, f"{name}: oracle failed: {exc!r}"


def _oracle_error(name, mc, params, msg):
    return CheckReport(name, mc, math.nan, math.nan, False, params, 0.0, "oracle-error", [msg])


# ----------------------------------------------------------------------------
# angular law


def theta_terms(t: float, tol: float = 1e-14) -> int:
    """Smallest N with (1/pi) sum_{n>N} e^{-n^2 t/2} < tol."""
    if not t > 0:
        raise ValueError("t must be positive")
    n = 1
    while theta_tail_bound(t, n) >= tol:
        n = n * 2 if n < 1 << 20 else n + (1 << 20)
    lo, hi = n // 2, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if theta_tail_bound(t, mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def theta_tail_bound(t: float, n_terms: int) -> float:
    """(1/pi) sum_{n > N} exp(-n^2 t/2), bounded by an integral tail."""
    n1 = n_terms + 1
    first = math.exp(-n1 * n1 * t / 2.0)
    # sum_{n>=n1} e^{-n^2 t/2} <= e^{-n1^2 t/2} (1 + 1/(n1 t))
    return first * (1.0 + 1.0 / (n1 * t)) / math.pi


def theta_density(gamma0, theta, t: float):
    """Density at theta of circular Brownian motion started at gamma0 after time t.

    Wrapped Gaussian images for t < 1 (no cancellation in the tails), cosine
    series otherwise.
    """
    d = np.asarray(gamma0, float) - np.asarray(theta, float)
    if 0 < t < 1.0:
        d = np.mod(d + np.pi, 2.0 * np.pi) - np.pi
        # dropped images have |d + 2 pi k| >= 11 pi
        e = np.add.outer(d, 2.0 * np.pi * np.arange(-6, 7))
        out = np.exp(-e * e / (2.0 * t)).sum(axis=-1) / math.sqrt(2.0 * np.pi * t)
        return float(out) if np.ndim(out) == 0 else out
    n = theta_terms(t)
    k = np.arange(1, n + 1)
    w = np.exp(-k * k * t / 2.0)
    s = np.cos(np.multiply.outer(d, k)) @ w
    out = (1.0 + 2.0 * s) / (2.0 * np.pi)
    return float(out) if np.ndim(out) == 0 else out


_HERMITE = (lambda n: (n[0], n[1] / math.sqrt(2.0 * math.pi)))(np.polynomial.hermite_e.hermegauss(80))


def angular_average(f: TestFunction, x: float, clock: float, gamma0: float = 0.0, n_theta: int = 512) -> float:
    """E[f(x exp(i gamma_clock))] for circular Brownian motion started at gamma0."""
    th = -np.pi + 2.0 * np.pi * np.arange(n_theta) / n_theta
    vals = f(x * np.exp(1j * th))
    if f.radial_flag:
        return float(vals[0])
    if not math.isfinite(clock):
        return float(vals.mean())
    if clock <= 0:
        return float(f(np.array([x * np.exp(1j * gamma0)]))[0])
    if clock < 1.0:
        # the angle is gamma0 + sqrt(clock) N, and f is 2 pi periodic in it
        xi, w = _HERMITE
        vals = f(x * np.exp(1j * (gamma0 + math.sqrt(clock) * xi)))
        return float(np.dot(w, vals))
    dens = theta_density(gamma0, th, clock)
    return float(np.sum(vals * dens) * 2.0 * np.pi / n_theta)


# ----------------------------------------------------------------------------
# helpers


def _params_dict(**kw):
    out = {}
    for k, v in kw.items():
        if isinstance(v, complex):
            out[k] = [v.real, v.imag]
        elif isinstance(v, PlanarPoint):
            out[k] = [v.re, v.im]
        elif isinstance(v, TestFunction):
            out[k] = v.name
        elif isinstance(v, sde.SimConfig):
            out[k] = asdict(v)
        else:
            out[k] = v
    return out


def _planar_end(summary: sde.PathSummary, need_angle: bool):
    rho = np.sqrt(summary.x_T)
    if need_angle:
        return rho * np.exp(1j * summary.theta_T)
    return rho + 0j


# ----------------------------------------------------------------------------
# measure-change representations of P^beta_t


def check_theorem1(beta: float, t: float, z0, f: TestFunction, cfg: sde.SimConfig,
                   rel_tol: float = 0.02) -> CheckReport:
    """P^beta_t f(z0) against the beta-down Monte Carlo representation.

    For z0 = 0 the ring functional is checked with weight e^{beta t} 2 pi / K_0.
    """
    z0c = complex(PlanarPoint.of(z0))
    name = "theorem1" if z0c != 0 else "ring"
    cfg = cfg.replace(horizon=t)
    t_start = time.perf_counter()
    x0 = abs(z0c) / math.sqrt(2.0)
    s = sde.simulate_summary(0.0, beta, x0, cfg, theta0=math.atan2(z0c.imag, z0c.real) if z0c else 0.0,
                             angle=not f.radial_flag, record_hit=False)
    zt = _planar_end(s, not f.radial_flag)
    r = np.abs(zt)
    sb = math.sqrt(2.0 * beta)
    with np.errstate(over="ignore"):
        inv_k0 = np.where(r > 0, np.exp(-np.asarray(log_bessel_k(0.0, np.maximum(sb * r, 1e-300)))), 0.0)
    if z0c != 0:
        pref = math.exp(beta * t) * bessel_k(0.0, sb * abs(z0c) / math.sqrt(2.0))
    else:
        pref = math.exp(beta * t) * 2.0 * math.pi
    w = pref * inv_k0 * f(math.sqrt(2.0) * zt)
    mc = estimate(w, time.perf_counter() - t_start)
    params = _params_dict(beta=beta, t=t, z0=z0c, f=f, dt=cfg.dt, n_paths=cfg.n_paths, seed=cfg.master_seed)
    oracle, err = _oracle(lambda: K.semigroup_apply(beta, t, f, z0c), name)
    if err:
        return _oracle_error(name, mc, params, err)
    return _report(name, mc, oracle, rel_tol, params)


def check_ring(beta: float, t: float, f: TestFunction, cfg: sde.SimConfig, rel_tol: float = 0.02) -> CheckReport:
    return check_theorem1(beta, t, 0.0, f, cfg, rel_tol)


def _rn_base(params: ModelParams, x0, rho, t):
    sb = math.sqrt(2.0 * params.beta)
    return np.asarray(hat_k(params.alpha, sb * np.asarray(rho))) / hat_k(params.alpha, sb * x0) * math.exp(-params.beta * t)


def check_rn_martingale(params: ModelParams, x0: float, t: float, cfg: sde.SimConfig,
                        estimator: str = "conditional") -> CheckReport:
    """Mean of K_hat(sqrt(2b) rho_t)/K_hat(sqrt(2b) x0) exp(Lambda L_t - b t) under BES(-alpha), = 1.

    With the exact scheme two estimators are available on the same paths:
    ``plain`` averages the weight itself; ``conditional`` replaces
    exp(Lambda L_t) by its conditional expectation given everything except
    the Gamma factors of the local-time draws (same mean, light tails).
    Euler schemes use kappa-occupation local time and the plain weight.
    """
    name = "rn-martingale"
    t_start = time.perf_counter()
    lam = params.lambda_alpha
    extra = {}
    if cfg.scheme == "exact":
        c = cfg.replace(horizon=t, dt=min(cfg.dt, t))
        e = sde.exact_summary(params.alpha, x0, c, rb_rate=lam)
        base = _rn_base(params, x0, e.rho_T, t)
        w_plain = base * np.exp(lam * e.L_T)
        w_cond = base * np.exp(e.log_rb)
        plain, cond = estimate(w_plain), estimate(w_cond)
        extra = {"plain": asdict(plain), "conditional": asdict(cond)}
        mc = cond if estimator == "conditional" else plain
    else:
        c = cfg.replace(horizon=t)
        s = sde.simulate_summary(params.alpha, None, x0, c, record_hit=False)
        w = _rn_base(params, x0, np.sqrt(s.x_T), t) * np.exp(lam * s.lt_kappa)
        mc = estimate(w)
        extra = {"plain_kappa": asdict(mc)}
        if params.alpha > 0:
            extra["plain_scale"] = asdict(estimate(_rn_base(params, x0, np.sqrt(s.x_T), t) * np.exp(lam * s.lt_scale)))
    mc.elapsed = time.perf_counter() - t_start
    p = _params_dict(alpha=params.alpha, beta=params.beta, x0=x0, t=t, scheme=cfg.scheme,
                     estimator=estimator, n_paths=cfg.n_paths, seed=cfg.master_seed)
    return _report(name, mc, 1.0, 0.0, p, extra=extra)


# ----------------------------------------------------------------------------
# resolvent


def _tilted_resolvent(params: ModelParams, lam: float, f: TestFunction, z0, cfg: sde.SimConfig):
    """Randomized-horizon estimate via the beta-down law.

    E_z0[e^{Lambda L_T} f(Z_T)] = E^{beta-down}_z0[e^{beta T} K_hat(sqrt(2b)|z0|)/K_hat(sqrt(2b)|Z_T|) f(Z_T)]
    with T ~ Exp(lam); the dominating factor e^{beta T} has finite variance when lam > 2 beta.
    """
    a, b = params.alpha, params.beta
    z0c = complex(PlanarPoint.of(z0))
    x0 = abs(z0c)
    n = cfg.n_paths
    T = np.array([sde.substream(cfg.master_seed, "horizon", i).exponential(1.0 / lam) for i in range(n)])
    T_grid = np.maximum(1, np.round(T / cfg.dt)) * cfg.dt
    c = cfg.replace(horizon=max(float(T_grid.max()), cfg.dt))
    s = sde.simulate_summary(a, b, x0, c, theta0=math.atan2(z0c.imag, z0c.real) if x0 else 0.0,
                             angle=not f.radial_flag, horizons=T_grid, record_hit=False)
    zt = _planar_end(s, not f.radial_flag)
    sb = math.sqrt(2.0 * b)
    w = np.exp(b * s.horizon) * hat_k(a, sb * x0) / np.asarray(hat_k(a, sb * np.abs(zt))) * f(zt) / lam
    return w


def _direct_resolvent(params: ModelParams, lam: float, f: TestFunction, z0, cfg: sde.SimConfig):
    """Randomized horizon under BES(-alpha) with exact (rho, L): e^{Lambda L_T} f(Z_T)/lam."""
    if not f.radial_flag:
        raise ValueError("the exact direct estimator needs a radial test function")
    x0 = abs(PlanarPoint.of(z0))
    e = sde.exact_summary(params.alpha, x0, cfg, exp_horizon=lam)
    return np.exp(params.lambda_alpha * e.L_T) * f(e.rho_T + 0j) / lam


def check_resolvent(params: ModelParams, lam: float, f: TestFunction, z0, cfg: sde.SimConfig,
                    rel_tol: float = 0.03, mode: str = "resolvent", estimator: str = "tilted") -> CheckReport:
    """Resolvent of the local-time-tilted planar process against the closed form.

    mode="resolvent": U f(z0) with the tilt exp(Lambda L_t).
    mode="falpha": f = 1, z0 = 0, scaled by Lambda, against Lambda/(lam (1 - (beta/lam)^alpha)).
    estimator="tilted" simulates the beta-down law; "direct" averages
    e^{Lambda L_T} under exact BES(-alpha) sampling (heavy tailed).
    """
    if not lam > params.beta:
        raise ValueError("lam must exceed beta")
    t_start = time.perf_counter()
    if mode == "falpha":
        f, z0 = TestFunction.constant(1.0), 0.0
        scale = params.lambda_alpha
    else:
        scale = 1.0
    name = "falpha" if mode == "falpha" else "resolvent"
    if estimator == "tilted":
        w = _tilted_resolvent(params, lam, f, z0, cfg) * scale
    elif estimator == "direct":
        w = _direct_resolvent(params, lam, f, z0, cfg) * scale
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    mc = estimate(w, time.perf_counter() - t_start)
    p = _params_dict(alpha=params.alpha, beta=params.beta, lam=lam, z0=complex(PlanarPoint.of(z0)), f=f,
                     mode=mode, estimator=estimator, dt=cfg.dt, n_paths=cfg.n_paths, seed=cfg.master_seed)
    if mode == "falpha":
        oracle = params.lambda_alpha / (lam * (1.0 - (params.beta / lam) ** params.alpha))
    else:
        oracle, err = _oracle(lambda: K.resolvent_closed_form(params, lam, f, z0), name)
        if err:
            return _oracle_error(name, mc, p, err)
    return _report(name, mc, oracle, rel_tol, p)


def check_falpha_limit(beta: float, lam: float, cfg: sde.SimConfig, alphas=(0.2, 0.1, 0.05),
                       rel_tol: float = 0.03) -> dict:
    """Sweep alpha down and compare L F_alpha(lam) with its limit 2 pi/(lam log(lam/beta))."""
    limit = 2.0 * math.pi / (lam * math.log(lam / beta))
    reports = [check_resolvent(ModelParams(a, beta), lam, TestFunction.constant(), 0.0, cfg, rel_tol, mode="falpha")
               for a in alphas]
    gaps = [abs(r.mc.mean - limit) for r in reports]
    errs = [r.mc.stderr for r in reports]
    # monotone approach within MC error: each gap no larger than the previous one plus 3 combined stderr
    mono = all(gaps[k + 1] <= gaps[k] + 3.0 * math.hypot(errs[k], errs[k + 1]) for k in range(len(gaps) - 1))
    oracle_gaps = [abs(r.oracle - limit) for r in reports]
    oracle_mono = all(oracle_gaps[k + 1] < oracle_gaps[k] for k in range(len(gaps) - 1))
    return {"name": "falpha-limit", "limit": limit, "alphas": list(alphas), "reports": reports,
            "gaps": gaps, "oracle_gaps": oracle_gaps, "monotone": mono, "oracle_monotone": oracle_mono,
            "passed": bool(mono and oracle_mono and all(r.passed for r in reports))}


# ----------------------------------------------------------------------------
# hitting times


def ks_distance(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    x = np.sort(np.asarray(samples, float))
    n = x.size
    F = np.asarray(cdf(x))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def check_gig(beta: float, x0: float, cfg: sde.SimConfig, qs=(0.5, 1.0, 2.0), alpha: float = 0.0,
              ks: bool = True, allowance: float = 0.01) -> list:
    """Hitting time of 0 under the beta-down law: KS distance to the GIG law and Laplace points."""
    t_start = time.perf_counter()
    s = sde.simulate_summary(alpha, beta, x0, cfg, stop_at_hit=True)
    t0 = s.t0_hit
    elapsed = time.perf_counter() - t_start
    hit = np.isfinite(t0)
    out = []
    base = _params_dict(alpha=alpha, beta=beta, x0=x0, dt=cfg.dt, n_paths=cfg.n_paths, horizon=cfg.horizon,
                        hit_rule=cfg.hit_rule, handoff=cfg.handoff, seed=cfg.master_seed)
    if ks:
        n = t0.size
        samples = np.where(hit, t0, np.inf)
        d = ks_distance(samples, lambda x: K.gig_cdf(beta, x0, np.minimum(x, 1e300), alpha))
        bound = allowance + 1.36 / math.sqrt(n)
        out.append(KSReport("gig-ks", d, bound, n, d <= bound, base, "pass" if d <= bound else "fail",
                            {"hit_fraction": float(hit.mean()), "elapsed": elapsed}))
    for q in qs:
        v = np.where(hit, np.exp(-q * np.where(hit, t0, 0.0)), 0.0)
        mc = estimate(v, elapsed)
        out.append(_report(f"gig-laplace(q={q})", mc, K.hitting_laplace(alpha, beta, q, x0), 0.0,
                           dict(base, q=q)))
    return out


# ----------------------------------------------------------------------------
# Kac expansion


def check_kac(alpha: float, beta: float, x0: float, t: float, cfg: sde.SimConfig) -> list:
    """e^{Lambda L_t} - 1 = Lambda int e^{Lambda L_s} dL_s, pathwise and in mean."""
    params = ModelParams(alpha, beta)
    lam = params.lambda_alpha
    c = cfg.replace(horizon=t)
    t_start = time.perf_counter()
    e = sde.exact_summary(alpha, x0, c, kac_rate=lam)
    left = np.expm1(lam * e.L_T)
    right = e.kac_sum
    elapsed = time.perf_counter() - t_start
    scale = np.maximum(1.0, np.abs(left))
    pathwise = float(np.max(np.abs(left - right) / scale))
    oracle = K.lt_exp_moment(params, x0, t) - 1.0
    p = _params_dict(alpha=alpha, beta=beta, x0=x0, t=t, dt=c.dt, n_paths=c.n_paths, seed=c.master_seed)
    wdiag = estimate(np.exp(lam * e.L_T))
    r_left = _report("kac-left", estimate(left, elapsed), oracle, 0.0, p, weight_diag=wdiag)
    r_right = _report("kac-right", estimate(right, elapsed), oracle, 0.0, p, weight_diag=wdiag)
    tol = 64 * np.finfo(float).eps * max(1, c.n_steps)
    r_path = CheckReport("kac-pathwise", MCEstimate(pathwise, 0.0, left.size, elapsed), 0.0, 0.0,
                         pathwise <= tol, dict(p, tol=tol), 0.0, "pass" if pathwise <= tol else "fail")
    return [r_path, r_left, r_right]


# ----------------------------------------------------------------------------
# pathwise comparison


def check_compare(beta: float, x0: float, cfg: sde.SimConfig, order_pair=(0.1, 0.3),
                  rate_alphas=(0.4, 0.2, 0.1), max_violation: float = 0.01, ratio_factor: float = 3.0) -> dict:
    """Order of coupled beta-down solutions and the L^2 gap bound in alpha2 (alpha1 = 0).

    The bound E sup|X_0 - X_a|^2 <= C a is checked by requiring that the
    normalised ratio E sup|X_0 - X_a|^2 / a grows by at most ``ratio_factor``
    from one alpha to the next in ``rate_alphas``; the full max/min spread is
    reported alongside.
    """
    a1, a2 = order_pair
    st = sde.coupled_compare(a1, a2, beta, x0, cfg)
    ratios = {}
    for a in rate_alphas:
        r = sde.coupled_compare(0.0, a, beta, x0, cfg)
        ratios[a] = r.l2_sup / a
    vals = list(ratios.values())
    growth = [vals[k + 1] / vals[k] for k in range(len(vals) - 1)]
    spread = max(vals) / min(vals)
    ok_order = st.violation_fraction <= max_violation
    ok_rate = all(g <= ratio_factor for g in growth)
    return {"name": "compare", "violation_fraction": st.violation_fraction, "min_gap": float(st.min_gap.min()),
            "tol": st.tol, "order_pass": ok_order, "ratios": ratios, "ratio_growth": growth,
            "ratio_spread": spread, "rate_pass": ok_rate, "passed": bool(ok_order and ok_rate),
            "params": _params_dict(beta=beta, x0=x0, dt=cfg.dt, horizon=cfg.horizon, n_paths=cfg.n_paths,
                                   scheme=cfg.scheme, order_pair=list(order_pair), rate_alphas=list(rate_alphas),
                                   seed=cfg.master_seed)}


# ----------------------------------------------------------------------------
# local time


def check_local_time(cfg: sde.SimConfig, alpha_laplace: float = 0.25, lam: float = 2.0,
                     alpha_refine: float = 0.3, refine_paths: int = 100, refine_dt: float = 1e-5,
                     refine_factors=(100, 10, 1), norm_grid=None) -> dict:
    """Normalisation of kappa_eps, Laplace functional of dL from 0, and sup-gap refinement."""
    norm_grid = norm_grid or [(a, e) for a in (0.0, 0.1, 0.25, 0.4, 0.49) for e in (1e-6, 1e-3, 0.1, 1.0)]
    norm_err = max(abs(K.kappa_normalization(a, e) - 1.0) for a, e in norm_grid)
    e = sde.exact_summary(alpha_laplace, 0.0, cfg, exp_horizon=lam)
    mc = estimate(e.L_T)
    params = ModelParams(alpha_laplace, 1.0)
    oracle = 1.0 / (params.c_star * lam**alpha_laplace)
    lap = _report("dl-laplace", mc, oracle, 0.0, _params_dict(alpha=alpha_laplace, lam=lam, n_paths=cfg.n_paths,
                                                              seed=cfg.master_seed))
    rc = sde.SimConfig(dt=refine_dt, horizon=1.0, n_paths=refine_paths, master_seed=cfg.master_seed,
                       threads=cfg.threads)
    gaps = sde.lt_refinement(alpha_refine, 0.0, rc, refine_factors)
    mean_gap = gaps.mean(axis=0)
    mono = bool(np.all(np.diff(mean_gap) < 0))
    return {"name": "local-time", "normalization_max_error": norm_err, "normalization_pass": norm_err <= 1e-10,
            "laplace": lap, "refine_steps": [refine_dt * k for k in refine_factors], "sup_gap_mean": mean_gap.tolist(),
            "sup_gap_stderr": (gaps.std(axis=0, ddof=1) / math.sqrt(refine_paths)).tolist(),
            "refine_pass": mono, "passed": bool(norm_err <= 1e-10 and lap.passed and mono)}
