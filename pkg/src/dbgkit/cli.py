"""Command-line entry point: dbgkit {specfun,kernel,simulate,verify}.

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np
from scipy import integrate

from . import kernels as K
from . import sde
from . import specfun as S
from . import verify as V
from .kernels import TestFunction
from .sde import ConfigError, SimConfig
from .specfun import ModelParams

SEED_ENV = "DBL_SEED"
U64 = (1 << 64) - 1


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "0+unknown"


# ----------------------------------------------------------------------------
# configuration helpers


class _Fields:
    """Pop typed fields from a config mapping, naming the full path on error."""

    def __init__(self, data, path: str):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(path, "expected a JSON object")
        self.data = dict(data)
        self.path = path

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def real(self, key, default=None, lo=None, hi=None, strict_lo=False):
        v = self.data.pop(key, default)
        if v is None:
            raise ConfigError(self._name(key), "required")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(self._name(key), f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(self._name(key), "must be finite")
        if lo is not None and (v < lo or (strict_lo and v == lo)):
            raise ConfigError(self._name(key), f"must be {'>' if strict_lo else '>='} {lo}")
        if hi is not None and v >= hi:
            raise ConfigError(self._name(key), f"must be < {hi}")
        return v

    def optional_real(self, key, **kw):
        if self.data.get(key) is None:
            self.data.pop(key, None)
            return None
        return self.real(key, **kw)

    def reals(self, key, default):
        v = self.data.pop(key, default)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v]
        if not isinstance(v, list) or not v or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise ConfigError(self._name(key), "expected a non-empty list of numbers")
        return [float(x) for x in v]

    def point(self, key, default):
        v = self.data.pop(key, default)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return complex(float(v), 0.0)
        if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
            return complex(float(v[0]), float(v[1]))
        raise ConfigError(self._name(key), "expected a number or [re, im]")

    def choice(self, key, default, options):
        v = self.data.pop(key, default)
        if v not in options:
            raise ConfigError(self._name(key), f"expected one of {sorted(options)}, got {v!r}")
        return v

    def flag(self, key, default):
        v = self.data.pop(key, default)
        if not isinstance(v, bool):
            raise ConfigError(self._name(key), "expected true or false")
        return v

    def sub(self, key):
        return _Fields(self.data.pop(key, None), self._name(key))

    def raw(self, key, default=None):
        return self.data.pop(key, default)

    def done(self):
        if self.data:
            k = sorted(self.data)[0]
            raise ConfigError(self._name(k), "unknown field")


def _test_function(spec, path) -> TestFunction:
    fl = _Fields(spec if spec is not None else {"kind": "constant"}, path)
    kind = fl.choice("kind", "constant", {"constant", "gaussian", "shifted_gaussian"})
    if kind == "constant":
        f = TestFunction.constant(fl.real("value", 1.0))
    elif kind == "gaussian":
        f = TestFunction.gaussian(fl.real("c", 1.0, lo=0.0, strict_lo=True))
    else:
        f = TestFunction.shifted_gaussian(fl.point("center", [0.0, 0.0]), fl.real("c", 1.0, lo=0.0, strict_lo=True))
    fl.done()
    return f


def _sim_config(fl: _Fields, run, defaults: dict) -> SimConfig:
    sub = fl.sub("sim")
    d = dict(defaults)
    for key, val in list(sub.data.items()):
        if key not in {f.name for f in dataclasses.fields(SimConfig)}:
            raise ConfigError(sub._name(key), "unknown field")
        d[key] = val
    d["master_seed"] = run.seed
    d["threads"] = run.threads
    try:
        return SimConfig(**d)
    except ConfigError as exc:
        raise ConfigError(sub._name(exc.field), str(exc).split(": ", 1)[-1]) from None
    except TypeError as exc:
        raise ConfigError(sub.path, str(exc)) from None


# ----------------------------------------------------------------------------
# output


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            obj = obj.to_dict()
        else:
            obj = dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if k != "elapsed"}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _meta(run, dt=None, n_paths=None) -> dict:
    return {"seed": run.seed, "dt": dt, "n_paths": n_paths, "version": version()}


def write_csv(header: list, rows, meta: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _emit(run, name: str, text: str):
    if run.out is None:
        sys.stdout.write(text)
        return
    run.out.mkdir(parents=True, exist_ok=True)
    (run.out / name).write_text(text)


# ----------------------------------------------------------------------------
# subcommands


@dataclasses.dataclass
class RunConfig:
    subcommand: str
    params: dict
    out: Path | None
    seed: int
    threads: int
    rel_tol: float | None
    check: str | None = None


SPECFUN_NAMES = ("bessel_k", "hat_k", "ratio_r", "drift_mu", "bessel_i")


def run_specfun(run: RunConfig) -> int:
    fl = _Fields(run.params, "")
    name = fl.choice("function", "bessel_k", set(SPECFUN_NAMES))
    nus = fl.reals("nu", [0.0])
    xs = fl.reals("x", [1.0])
    beta = fl.optional_real("beta", lo=0.0, strict_lo=True)
    fl.done()
    if name == "drift_mu" and beta is None:
        raise ConfigError("beta", "required for drift_mu")
    rows = []
    for nu in nus:
        for x in xs:
            if name == "bessel_k":
                v = S.bessel_k(nu, x)
            elif name == "bessel_i":
                v = S.bessel_i(nu, x)
            elif name == "hat_k":
                v = S.hat_k(nu, x)
            elif name == "ratio_r":
                v = S.ratio_r(nu, x)
            else:
                v = S.drift_mu(nu, beta, x)
            rows.append((nu, x, float(v)))
    _emit(run, f"{name}.csv", write_csv(["nu", "x", "value"], rows, _meta(run)))
    return 0


KERNEL_NAMES = ("p_beta", "ring_p", "s_beta", "heat_kernel", "green_lambda", "gig_density", "gig_cdf",
                "hitting_laplace", "dbg_resolvent_kernel")


def _rounding(v: float) -> float:
    return float(np.finfo(float).eps * abs(v))


def run_kernel(run: RunConfig) -> int:
    """Columns: operation, parameters..., value, est_error.

    est_error is the level-2 minus level-1 quadrature difference for
    p_beta and ring_p, the adaptive estimate for s_beta, the gap to an
    independent adaptive quadrature for gig_cdf, and eps*|value| for the
    closed forms.
    """
    fl = _Fields(run.params, "")
    name = fl.choice("kernel", "s_beta", set(KERNEL_NAMES))
    beta = fl.real("beta", 1.0, lo=0.0, strict_lo=True)
    ts = fl.reals("t", [0.5])
    rows = []
    if name in ("p_beta", "dbg_resolvent_kernel", "ring_p", "heat_kernel", "green_lambda"):
        z = fl.point("z", [0.5, 0.0])
        zt = fl.point("zt", [0.3, 0.0])
        lam = fl.real("lam", 2.0 * beta, lo=beta, strict_lo=True) if name in ("dbg_resolvent_kernel", "green_lambda") else None
        fl.done()
        head = ["operation", "beta", "t" if lam is None else "lam", "z_re", "z_im"]
        if name != "ring_p":
            head += ["zt_re", "zt_im"]
        header = head + ["value", "est_error"]
        pts = [z.real, z.imag] + ([] if name == "ring_p" else [zt.real, zt.imag])
        if name in ("p_beta", "ring_p"):
            for t in ts:
                f = (lambda lv: K.p_beta(beta, t, z, zt, level=lv)) if name == "p_beta" else \
                    (lambda lv: K.ring_p(beta, t, z, level=lv))
                v1, v2 = f(1), f(2)
                rows.append([name, beta, t] + pts + [v1, abs(v2 - v1)])
        elif name == "heat_kernel":
            for t in ts:
                v = float(K.heat_kernel(z - zt, t))
                rows.append([name, beta, t] + pts + [v, _rounding(v)])
        else:
            v = float(K.green_lambda(lam, z - zt)) if name == "green_lambda" else K.dbg_resolvent_kernel(beta, lam, z, zt)
            rows.append([name, beta, lam] + pts + [v, _rounding(v)])
    elif name == "s_beta":
        fl.done()
        header = ["operation", "beta", "t", "value", "est_error"]
        rows = [[name, beta, t, *K.s_beta(beta, t, return_error=True)] for t in ts]
    else:
        x0 = fl.real("x0", 1.0, lo=0.0, strict_lo=True)
        alpha = fl.real("alpha", 0.0, lo=0.0, hi=0.5)
        if name == "hitting_laplace":
            qs = fl.reals("q", [0.5, 1.0, 2.0])
            fl.done()
            header = ["operation", "alpha", "beta", "x0", "q", "value", "est_error"]
            for q in qs:
                v = K.hitting_laplace(alpha, beta, q, x0)
                rows.append([name, alpha, beta, x0, q, v, _rounding(v)])
        else:
            fl.done()
            header = ["operation", "alpha", "beta", "x0", "t", "value", "est_error"]
            for t in ts:
                if name == "gig_density":
                    v = float(K.gig_density(beta, x0, t, alpha))
                    err = _rounding(v)
                else:
                    v = float(K.gig_cdf(beta, x0, t, alpha))
                    ref = integrate.quad(lambda s: float(K.gig_density(beta, x0, math.exp(s), alpha)) * math.exp(s),
                                         -60.0, math.log(t), limit=400, epsabs=1e-15, epsrel=1e-12)[0]
                    err = abs(v - ref)
                rows.append([name, alpha, beta, x0, t, v, err])
    _emit(run, f"{name}.csv", write_csv(header, rows, _meta(run)))
    return 0


def run_simulate(run: RunConfig) -> int:
    fl = _Fields(run.params, "")
    alpha = fl.real("alpha", 0.0, lo=0.0, hi=0.5)
    beta = fl.optional_real("beta", lo=0.0, strict_lo=True)
    x0 = fl.real("x0", 1.0, lo=0.0)
    theta0 = fl.real("theta0", 0.0)
    angle = fl.flag("angle", True)
    cfg = _sim_config(fl, run, {"n_paths": 1000})
    fl.done()
    if cfg.scheme == "exact":
        if beta is not None:
            raise ConfigError("sim.scheme", "exact scheme is available only without beta")
        e = sde.exact_summary(alpha, x0, cfg)
        header = ["path", "rho_T", "L_T", "t0_hit"]
        rows = [(i, e.rho_T[i], e.L_T[i], e.t0_hit[i]) for i in range(cfg.n_paths)]
    else:
        s = sde.simulate_summary(alpha, beta, x0, cfg, theta0=theta0, angle=angle)
        header = ["path", "x_T", "lt_kappa", "lt_scale", "t0_hit", "clock_T", "theta_T", "n_zero"]
        rows = [(i, s.x_T[i], s.lt_kappa[i], s.lt_scale[i], s.t0_hit[i], s.clock_T[i], s.theta_T[i],
                 int(s.n_zero[i])) for i in range(cfg.n_paths)]
    _emit(run, "simulate.csv", write_csv(header, rows, _meta(run, cfg.dt, cfg.n_paths)))
    return 0


# verify: one runner per named check; each returns (passed, payload)


def _v_theorem1(fl, run, ring=False):
    beta = fl.real("beta", 1.0, lo=0.0, strict_lo=True)
    t = fl.real("t", 0.5, lo=0.0, strict_lo=True)
    z0 = 0j if ring else fl.point("z0", [0.7, 0.0])
    f = _test_function(fl.raw("f", {"kind": "gaussian", "c": 1.0}), fl._name("f"))
    tol = fl.real("rel_tol", 0.02 if run.rel_tol is None else run.rel_tol, lo=0.0)
    cfg = _sim_config(fl, run, {"dt": 1e-4, "n_paths": 200000})
    fl.done()
    r = V.check_theorem1(beta, t, z0, f, cfg, tol)
    return r.passed, r, cfg


def _v_ring(fl, run):
    return _v_theorem1(fl, run, ring=True)


def _v_rn(fl, run):
    alpha = fl.real("alpha", 0.25, lo=0.0, strict_lo=True, hi=0.5)
    beta = fl.real("beta", 1.0, lo=0.0, strict_lo=True)
    x0 = fl.real("x0", 0.5, lo=0.0)
    t = fl.real("t", 0.5, lo=0.0, strict_lo=True)
    est = fl.choice("estimator", "conditional", {"conditional", "plain"})
    max_se = fl.real("max_stderr", 0.01, lo=0.0)
    cfg = _sim_config(fl, run, {"dt": 0.5, "horizon": 0.5, "n_paths": 100000, "scheme": "exact"})
    fl.done()
    r = V.check_rn_martingale(ModelParams(alpha, beta), x0, t, cfg, estimator=est)
    ok = r.passed and r.mc.stderr <= max_se
    return ok, r, cfg


def _v_resolvent(fl, run):
    alpha = fl.real("alpha", 0.2, lo=0.0, strict_lo=True, hi=0.5)
    beta = fl.real("beta", 1.0, lo=0.0, strict_lo=True)
    lam = fl.real("lam", 3.0, lo=beta, strict_lo=True)
    z0 = fl.point("z0", [0.5, 0.0])
    f = _test_function(fl.raw("f", None), fl._name("f"))
    mode = fl.choice("mode", "resolvent", {"resolvent", "falpha"})
    est = fl.choice("estimator", "tilted", {"tilted", "direct"})
    tol = fl.real("rel_tol", 0.03 if run.rel_tol is None else run.rel_tol, lo=0.0)
    cfg = _sim_config(fl, run, {"dt": 1e-4, "n_paths": 40000})
    fl.done()
    r = V.check_resolvent(ModelParams(alpha, beta), lam, f, z0, cfg, tol, mode=mode, estimator=est)
    return r.passed, r, cfg


def _v_falpha(fl, run):
    beta = fl.real("beta", 1.0, lo=0.0, strict_lo=True)
    lam = fl.real("lam", 3.0, lo=beta, strict_lo=True)
    alphas = fl.reals("alphas", [0.2, 0.1, 0.05])
    tol = fl.real("rel_tol", 0.03 if run.rel_tol is None else run.rel_tol, lo=0.0)
    cfg = _sim_config(fl, run, {"dt": 1e-4, "n_paths": 40000})
    fl.done()
    d = V.check_falpha_limit(beta, lam, cfg, tuple(alphas), tol)
    return d["passed"], d, cfg


def _v_gig(fl, run):
    beta = fl.real("beta", 1.0, lo=0.0, strict_lo=True)
    x0 = fl.real("x0", 1.0, lo=0.0, strict_lo=True)
    alpha = fl.real("alpha", 0.0, lo=0.0, hi=0.5)
    qs = fl.reals("q", [0.5, 1.0, 2.0])
    ks = fl.flag("ks", True)
    cfg = _sim_config(fl, run, {"dt": 1e-4, "horizon": 20.0, "n_paths": 100000})
    fl.done()
    reps = V.check_gig(beta, x0, cfg, tuple(qs), alpha, ks)
    return all(r.passed for r in reps), reps, cfg


def _v_kac(fl, run):
    alpha = fl.real("alpha", 0.25, lo=0.0, strict_lo=True, hi=0.5)
    beta = fl.real("beta", 0.25, lo=0.0, strict_lo=True)
    x0 = fl.real("x0", 0.5, lo=0.0)
    t = fl.real("t", 0.5, lo=0.0, strict_lo=True)
    cfg = _sim_config(fl, run, {"dt": 0.01, "horizon": t, "n_paths": 100000, "scheme": "exact"})
    fl.done()
    reps = V.check_kac(alpha, beta, x0, t, cfg)
    return all(r.passed for r in reps), reps, cfg


def _v_compare(fl, run):
    beta = fl.real("beta", 1.0, lo=0.0, strict_lo=True)
    x0 = fl.real("x0", 0.5, lo=0.0)
    pair = fl.reals("order_pair", [0.1, 0.3])
    alphas = fl.reals("rate_alphas", [0.4, 0.2, 0.1])
    cfg = _sim_config(fl, run, {"dt": 1e-4, "horizon": 1.0, "n_paths": 1000, "scheme": "drift_implicit_sqrt"})
    fl.done()
    if len(pair) != 2 or not pair[0] < pair[1]:
        raise ConfigError("order_pair", "expected [alpha1, alpha2] with alpha1 < alpha2")
    d = V.check_compare(beta, x0, cfg, tuple(pair), tuple(alphas))
    return d["passed"], d, cfg


def _v_local_time(fl, run):
    alpha = fl.real("alpha", 0.25, lo=0.0, strict_lo=True, hi=0.5)
    lam = fl.real("lam", 2.0, lo=0.0, strict_lo=True)
    cfg = _sim_config(fl, run, {"dt": 1.0, "horizon": 1.0, "n_paths": 100000, "scheme": "exact"})
    fl.done()
    d = V.check_local_time(cfg, alpha_laplace=alpha, lam=lam)
    return d["passed"], d, cfg


CHECKS = {
    "theorem1": _v_theorem1,
    "ring": _v_ring,
    "rn-martingale": _v_rn,
    "resolvent": _v_resolvent,
    "gig": _v_gig,
    "kac": _v_kac,
    "compare": _v_compare,
    "falpha-limit": _v_falpha,
    "local-time": _v_local_time,
}


def run_verify(run: RunConfig) -> int:
    fl = _Fields(run.params, "")
    t0 = time.perf_counter()
    started = datetime.now(timezone.utc).isoformat()
    passed, payload, cfg = CHECKS[run.check](fl, run)
    doc = {
        "check": run.check,
        "pass": bool(passed),
        "meta": _meta(run, cfg.dt, cfg.n_paths),
        "result": _jsonable(payload),
        "timestamp": {"started": started, "elapsed_s": time.perf_counter() - t0},
    }
    _emit(run, f"{run.check}.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0 if passed else 1


RUNNERS = {"specfun": run_specfun, "kernel": run_kernel, "simulate": run_simulate, "verify": run_verify}


# ----------------------------------------------------------------------------
# argument parsing


CSV_HELP = {
    "specfun": "CSV columns: nu, x, value",
    "kernel": "CSV columns: operation, parameters (beta, t or lam or q, z, zt, alpha, x0 as applicable), value, est_error",
    "simulate": "CSV columns: path, x_T, lt_kappa, lt_scale, t0_hit, clock_T, theta_T, n_zero "
                "(exact scheme: path, rho_T, L_T, t0_hit)",
    "verify": "writes <check>.json; exit status 1 if the check fails",
}


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _threads(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON parameter file")
    common.add_argument("--out", type=Path, help="output directory (default: stdout)")
    common.add_argument("--seed", type=_seed, help=f"master seed (u64); overrides ${SEED_ENV}")
    common.add_argument("--threads", type=_threads, default=1)
    common.add_argument("--rel-tol", type=float, dest="rel_tol")
    p = argparse.ArgumentParser(prog="dbgkit", description="Kernels, simulation and Monte Carlo checks "
                                "for the two-dimensional delta-Bose gas.")
    subs = p.add_subparsers(dest="subcommand", required=True)
    for name in ("specfun", "kernel", "simulate"):
        subs.add_parser(name, parents=[common], help=CSV_HELP[name], description=CSV_HELP[name])
    v = subs.add_parser("verify", parents=[common], help=CSV_HELP["verify"], description=CSV_HELP["verify"])
    v.add_argument("check", choices=sorted(CHECKS))
    return p


def _resolve_seed(args, params) -> int:
    v = params.pop("seed", 0)
    if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= U64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env != "":
        try:
            return _seed(env)
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(SEED_ENV, str(exc)) from None
    return v


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = {}
        if args.config is not None:
            if not args.config.is_file():
                raise ConfigError(str(args.config), "config file not found")
            try:
                params = json.loads(args.config.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(str(args.config), f"invalid JSON: {exc}") from None
            if not isinstance(params, dict):
                raise ConfigError(str(args.config), "top level must be a JSON object")
        seed = _resolve_seed(args, params)
        if args.rel_tol is not None and not (args.rel_tol >= 0 and math.isfinite(args.rel_tol)):
            raise ConfigError("--rel-tol", "must be a nonnegative number")
        run = RunConfig(args.subcommand, params, args.out, seed, args.threads, args.rel_tol,
                        getattr(args, "check", None))
        return RUNNERS[run.subcommand](run)
    except ConfigError as exc:
        print(f"dbgkit: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
