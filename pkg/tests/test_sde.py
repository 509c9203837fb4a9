import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from dbgkit import sde
from dbgkit.sde import ConfigError, SimConfig
from dbgkit.specfun import ModelParams, drift_mu


def test_config_validation():
    SimConfig()
    for kw, name in [({"dt": -1.0}, "dt"), ({"dt": 2.0, "horizon": 1.0}, "dt"), ({"n_paths": 0}, "n_paths"),
                     ({"scheme": "rk4"}, "scheme"), ({"hit_rule": "x"}, "hit_rule"),
                     ({"master_seed": -3}, "master_seed"), ({"threads": 0}, "threads"),
                     ({"eps_lt": 0.0}, "eps_lt")]:
        with pytest.raises(ConfigError) as e:
            SimConfig(**kw)
        assert e.value.field == name
    cfg = SimConfig(dt=1e-3)
    assert cfg.eps == pytest.approx(1e-3**0.7)
    assert cfg.floor == pytest.approx(1e-6)
    assert cfg.n_steps == 1000
    with pytest.raises(ConfigError):
        cfg.replace(dt=0.0)


def test_substreams_are_distinct_and_reproducible():
    a = sde.substream(3, "radial", 5).standard_normal(4)
    assert np.array_equal(a, sde.substream(3, "radial", 5).standard_normal(4))
    for other in [(3, "angle", 5), (3, "radial", 6), (4, "radial", 5)]:
        assert not np.array_equal(a, sde.substream(*other).standard_normal(4))


@pytest.mark.parametrize("scheme", ["full_truncation_euler", "drift_implicit_sqrt"])
def test_summary_independent_of_thread_count(scheme):
    cfg = SimConfig(dt=1e-3, horizon=0.2, n_paths=40, master_seed=11, scheme=scheme)
    a = sde.simulate_summary(0.2, 1.0, 0.5, cfg, angle=True)
    b = sde.simulate_summary(0.2, 1.0, 0.5, cfg.replace(threads=4), angle=True)
    for f in ("x_T", "lt_kappa", "t0_hit", "theta_T", "clock_T"):
        assert np.array_equal(getattr(a, f), getattr(b, f), equal_nan=True)
    e1 = sde.exact_summary(0.2, 0.5, cfg.replace(scheme="exact"))
    e2 = sde.exact_summary(0.2, 0.5, cfg.replace(scheme="exact", threads=3))
    assert np.array_equal(e1.L_T, e2.L_T) and np.array_equal(e1.rho_T, e2.rho_T)


def test_path_api_matches_summary():
    cfg = SimConfig(dt=1e-3, horizon=0.1, n_paths=3, master_seed=2)
    s = sde.simulate_summary(0.25, None, 0.4, cfg)
    for i in range(3):
        p = sde.simulate_besq(0.25, 0.4, cfg, substream=i)
        assert p.x[-1] == pytest.approx(s.x_T[i], rel=1e-12, abs=1e-15)
        assert p.lt[-1] == pytest.approx(s.lt_kappa[i], rel=1e-10, abs=1e-15)
        assert np.all(p.x >= 0)
        assert p.noise_id == (2, "radial", i)


@pytest.mark.parametrize("scheme", ["full_truncation_euler", "reflected_milstein", "drift_implicit_sqrt", "exact"])
def test_besq_mean(scheme):
    # E X_t = x0^2 + (2 - 2 alpha) t for the process reflected at 0
    a, x0, t = 0.25, 0.3, 0.5
    cfg = SimConfig(dt=1e-3, horizon=t, n_paths=4000, master_seed=1, scheme=scheme)
    if scheme == "exact":
        x = sde.exact_summary(a, x0, cfg.replace(dt=t)).rho_T ** 2
    else:
        x = sde.simulate_summary(a, None, x0, cfg).x_T
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - (x0**2 + (2 - 2 * a) * t)) < 4 * se + 0.01


def test_exact_hitting_time_law():
    # T0 = x0^2 / (2 G), G ~ Gamma(alpha)
    a, x0, t = 0.3, 0.5, 0.4
    cfg = SimConfig(dt=t, horizon=t, n_paths=20000, master_seed=4, scheme="exact")
    s = sde.exact_summary(a, x0, cfg)
    hit = np.isfinite(s.t0_hit)
    p = special.gammaincc(a, x0 * x0 / (2 * t))
    assert abs(hit.mean() - p) < 4 * math.sqrt(p * (1 - p) / hit.size)
    assert np.all(s.L_T[~hit] == 0.0)
    assert np.all(s.L_T[hit] > 0.0)


def test_exact_local_time_mean_from_zero():
    # E_0 L_t = t^alpha / (C* Gamma(1 + alpha))
    a, t = 0.25, 0.5
    p = ModelParams(a, 1.0)
    cfg = SimConfig(dt=t, horizon=t, n_paths=20000, master_seed=8, scheme="exact")
    L = sde.exact_summary(a, 0.0, cfg).L_T
    ref = t**a / (p.c_star * math.gamma(1 + a))
    assert abs(L.mean() - ref) < 4 * L.std() / math.sqrt(L.size)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.45), st.floats(0.05, 3.0), st.floats(1e-6, 0.3), st.floats(-3.0, 3.0), st.floats(0.0, 4.0))
def test_implicit_step_solves_the_equation(alpha, beta, dt, z, x):
    tab = sde._ratio_tab(round(alpha, 2))
    alpha = round(alpha, 2)
    dw = z * math.sqrt(dt)
    xn = sde._implicit_step(x, dt, dw, 1, alpha, beta, tab)
    y = math.sqrt(xn)
    assert y > 0
    mu = drift_mu(alpha, beta, xn)
    resid = y - (mu - 1.0) / (2.0 * y) * dt - (math.sqrt(x) + dw)
    # table interpolation carries about 3e-6 relative error in mu
    assert abs(resid) <= 1e-12 * (1 + y) + 1e-5 * (abs(mu) + 1) / (2 * y) * dt


def test_implicit_step_plain_closed_form():
    a, dt, x, dw = 0.2, 0.01, 0.04, -0.3
    xn = sde._implicit_step(x, dt, dw, 0, a, 0.0, sde._DUMMY_TAB)
    y = math.sqrt(xn)
    assert y - (1 - 2 * a) / (2 * y) * dt == pytest.approx(math.sqrt(x) + dw, abs=1e-15)


def test_implicit_scheme_orders_coupled_paths():
    cfg = SimConfig(dt=1e-3, horizon=1.0, n_paths=200, master_seed=5, scheme="drift_implicit_sqrt")
    st_ = sde.coupled_compare(0.1, 0.3, 1.0, 0.5, cfg, tol=0.0)
    assert st_.violation_fraction == 0.0
    same = sde.coupled_compare(0.2, 0.2, 1.0, 0.5, cfg)
    assert np.all(same.sup_sq == 0.0)
    with pytest.raises(ValueError):
        sde.coupled_compare(0.3, 0.1, 1.0, 0.5, cfg)


def test_skew_product_modulus_is_exact():
    cfg = SimConfig(dt=1e-3, horizon=0.5, n_paths=1, master_seed=3)
    rad = sde.simulate_besq_down(0.2, 1.0, 0.05, cfg)
    pl = sde.skew_product(rad, cfg, theta0=0.3)
    assert np.allclose(np.abs(pl.z), rad.rho, rtol=1e-14, atol=0)
    assert np.array_equal(pl.modulus, rad.rho)
    assert np.all((pl.theta >= -np.pi) & (pl.theta < np.pi))
    assert pl.theta[0] == pytest.approx(0.3)
    if pl.zero_hits:
        assert np.all(np.isinf(pl.clock[pl.clock_diverged]))


def test_local_time_methods():
    a = 0.3
    cfg = SimConfig(dt=1e-4, horizon=0.5, n_paths=1, master_seed=9)
    p = sde.simulate_besq(a, 0.0, cfg)
    params = ModelParams(a, 1.0)
    lk = sde.local_time(p, "kappa_occupation", params)
    ls = sde.local_time(p, "scale_formula", params)
    assert lk[0] == 0 and ls[0] == pytest.approx(0.0)
    assert np.all(np.diff(lk) >= 0)
    assert lk[-1] == pytest.approx(p.lt[-1], rel=1e-10)
    with pytest.raises(ValueError):
        sde.local_time(p, "nope", params)


def test_lt_scale_undefined_under_tilt():
    cfg = SimConfig(dt=1e-3, horizon=0.1, n_paths=5)
    s = sde.simulate_summary(0.2, 1.0, 0.5, cfg)
    assert np.all(np.isnan(s.lt_scale))
    s0 = sde.simulate_summary(0.2, None, 0.5, cfg)
    assert np.all(np.isfinite(s0.lt_scale))


def test_lt_refinement_shape_and_divisibility():
    cfg = SimConfig(dt=1e-4, horizon=0.1, n_paths=4, master_seed=1)
    g = sde.lt_refinement(0.3, 0.0, cfg)
    assert g.shape == (4, 3) and np.all(g >= 0)
    with pytest.raises(ConfigError):
        sde.lt_refinement(0.3, 0.0, cfg.replace(horizon=0.1003))


def test_gig_residual_beats_grid_rule():
    from dbgkit.kernels import gig_cdf

    beta, x0 = 1.0, 1.0
    kw = dict(dt=1e-3, horizon=20.0, n_paths=1500, master_seed=2)
    ts = {}
    for rule in ("gig_residual", "grid"):
        cfg = SimConfig(hit_rule=rule, **kw)
        ts[rule] = np.sort(sde.simulate_summary(0.0, beta, x0, cfg, stop_at_hit=True).t0_hit)
    ks = {}
    for rule, t in ts.items():
        t = t[np.isfinite(t)]
        f = np.array([gig_cdf(beta, x0, v) for v in t])
        n = t.size
        ks[rule] = max(np.max(np.arange(1, n + 1) / n - f), np.max(f - np.arange(n) / n))
    assert ks["gig_residual"] < ks["grid"]
    assert ks["gig_residual"] < 1.36 / math.sqrt(1500) * 1.5


def test_clock_grows_before_the_zero_hit_as_dt_shrinks():
    # int_0^{T0} dr / rho^2 = inf: the clock accrued before the first zero event grows under refinement
    med = []
    for dt in (1e-2, 1e-3, 1e-4):
        cfg = SimConfig(dt=dt, horizon=5.0, n_paths=1, master_seed=6)
        pre = []
        for i in range(40):
            rad = sde.simulate_besq_down(0.0, 1.0, 1.0, cfg, substream=i)
            pl = sde.skew_product(rad, cfg, substream=i)
            k = np.argmax(pl.clock_diverged)
            if pl.clock_diverged[k]:
                pre.append(pl.clock[k - 1])
        med.append(np.median(pre))
    assert med[0] < med[1] < med[2]
