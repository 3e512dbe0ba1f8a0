"""Command-line front end: solve, limit, constants, sweep, verify, expand.

All numeric output is written with 17 significant digits and fixed
column orders, so identical configurations produce byte-identical
files.  Exit codes: 0 success, 1 numerical failure, 2 validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import asymptotics, limit_ode, verify
from .grid_ops import UniformGrid, fmt17, save_profile
from .potential import SingularPotential, SingularityError
from .wave_solver import (NonConvergenceError, SolverConfig, load_wave,
                          solve, solve_family, save_wave)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_VALIDATION = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    m: list = field(default_factory=lambda: [2.0])
    delta: list = field(default_factory=lambda: list(verify.DEFAULT_DELTAS))
    grid_k: int = 64
    grid_L: float = 8.0
    tol: float = 1e-10
    max_iter: int = 20000
    ode_xmax: float = 200.0
    ode_step: float = 1e-3
    out: str = "out"
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)

    def validate(self):
        if not self.m:
            raise ConfigError("need at least one m")
        for m in self.m:
            if not m > 1.0:
                raise ConfigError(f"m must be > 1, got {m!r}")
        if not self.delta:
            raise ConfigError("need a nonempty delta list")
        for d in self.delta:
            if not 0.0 < d < 1.0:
                raise ConfigError(f"delta must lie in (0, 1), got {d!r}")
        if self.grid_k < 1:
            raise ConfigError(f"grid.k must be positive, got {self.grid_k!r}")
        if self.grid_L <= 0 or abs(2 * self.grid_L - round(2 * self.grid_L)) > 1e-12:
            raise ConfigError(f"grid.L must be a positive multiple of 1/2, got {self.grid_L!r}")
        if self.tol <= 0:
            raise ConfigError(f"solver.tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise ConfigError(f"solver.max_iter must be positive, got {self.max_iter!r}")
        if self.ode_xmax < 50.0:
            raise ConfigError(f"ode.xmax must be >= 50, got {self.ode_xmax!r}")
        if self.ode_step > 1e-3 * self.ode_xmax:
            raise ConfigError(f"ode.step must be <= 1e-3 * ode.xmax, got {self.ode_step!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be positive, got {self.jobs!r}")
        return self


_CONFIG_KEYS = {
    "m": ("m", lambda s: [float(v) for v in s.split(",")]),
    "delta": ("delta", lambda s: [float(v) for v in s.split(",")]),
    "grid.k": ("grid_k", int),
    "grid.L": ("grid_L", float),
    "solver.tol": ("tol", float),
    "solver.max_iter": ("max_iter", int),
    "ode.xmax": ("ode_xmax", float),
    "ode.step": ("ode_step", float),
    "output.dir": ("out", str),
    "jobs": ("jobs", int),
}


def load_config_file(path):
    """Flat key=value file; unknown keys are rejected."""
    updates = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            attr, conv = _CONFIG_KEYS[key]
            try:
                updates[attr] = conv(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return updates


def resolve_config(args):
    cfg = RunConfig()
    if args.config:
        for attr, val in load_config_file(args.config).items():
            setattr(cfg, attr, val)
    overrides = {
        "m": args.m, "delta": args.delta, "grid_k": args.grid_k,
        "grid_L": args.grid_L, "tol": args.tol, "max_iter": args.max_iter,
        "ode_xmax": args.ode_xmax, "ode_step": args.ode_step,
        "out": args.out, "jobs": args.jobs,
    }
    for attr, val in overrides.items():
        if val is not None:
            setattr(cfg, attr, val)
    return cfg.validate()


def echo_config(cfg, outdir):
    os.makedirs(outdir, exist_ok=True)
    lines = [
        "m = " + ",".join(fmt17(v) for v in cfg.m),
        "delta = " + ",".join(fmt17(v) for v in cfg.delta),
        f"grid.k = {cfg.grid_k}",
        "grid.L = " + fmt17(cfg.grid_L),
        "solver.tol = " + fmt17(cfg.tol),
        f"solver.max_iter = {cfg.max_iter}",
        "ode.xmax = " + fmt17(cfg.ode_xmax),
        "ode.step = " + fmt17(cfg.ode_step),
        f"output.dir = {cfg.out}",
        f"jobs = {cfg.jobs}",
    ]
    with open(os.path.join(outdir, "config_resolved.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")


def write_csv(path, header, rows):
    """Rows of already-formatted strings under a comma-separated header."""
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def _mdir(m):
    return f"m{m!r}"


def _ddir(delta):
    return f"d{delta!r}"


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_solve(cfg):
    if len(cfg.m) != 1 or len(cfg.delta) != 1:
        raise ConfigError("solve expects exactly one m and one delta")
    m, delta = cfg.m[0], cfg.delta[0]
    grid = UniformGrid(k=cfg.grid_k, L=cfg.grid_L)
    wave = solve(SolverConfig(pot=SingularPotential(m), delta=delta, grid=grid,
                              tol=cfg.tol, max_iter=cfg.max_iter))
    wdir = os.path.join(cfg.out, f"wave_{_mdir(m)}_{_ddir(delta)}")
    save_wave(wdir, wave)
    echo_config(cfg, cfg.out)
    print(f"delta={fmt17(delta)} eps={fmt17(wave.eps)} sigma={fmt17(wave.sigma)} "
          f"residual={fmt17(wave.residual)} iterations={wave.iterations}")
    return EXIT_OK


CONSTANTS_HEADER = ("m,mu_bar,kappa_bar,kappa_err,eta_bar,eta_err,"
                    "c_minus1,c_minus1_err,c_plus1,c_plus1_err")


def _constants_row(m, xmax, step):
    lp = limit_ode.integrate_limit(m, xmax=xmax, step=step)
    ac = limit_ode.asymptotic_constants(lp)
    row = [fmt17(m), fmt17(ac.mu_bar),
           fmt17(ac.kappa_bar), fmt17(ac.errors["kappa_bar"]),
           fmt17(ac.eta_bar), fmt17(ac.errors["eta_bar"]),
           fmt17(ac.c_minus1), fmt17(ac.errors["c_minus1"]),
           fmt17(ac.c_plus1), fmt17(ac.errors["c_plus1"])]
    return lp, row


def cmd_limit(cfg):
    if len(cfg.m) != 1:
        raise ConfigError("limit expects exactly one m")
    m = cfg.m[0]
    os.makedirs(cfg.out, exist_ok=True)
    lp, row = _constants_row(m, cfg.ode_xmax, cfg.ode_step)
    E = limit_ode.total_energy(lp)
    drift = np.abs(E - E[0])
    prof_rows = [[fmt17(x), fmt17(s), fmt17(sp), fmt17(spp), fmt17(d)]
                 for x, s, sp, spp, d in zip(lp.x, lp.S, lp.Sp, lp.Spp, drift)]
    write_csv(os.path.join(cfg.out, f"limit_{_mdir(m)}.csv"),
              "x,S,Sp,Spp,energy_drift", prof_rows)
    write_csv(os.path.join(cfg.out, "constants.csv"), CONSTANTS_HEADER, [row])
    echo_config(cfg, cfg.out)
    print(f"m={fmt17(m)} mu_bar={fmt17(lp.mu_bar)} "
          f"drift_rate={fmt17(limit_ode.energy_drift_rate(lp))}")
    return EXIT_OK


def cmd_constants(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    rows = [_constants_row(m, cfg.ode_xmax, cfg.ode_step)[1] for m in sorted(cfg.m)]
    write_csv(os.path.join(cfg.out, "constants.csv"), CONSTANTS_HEADER, rows)
    echo_config(cfg, cfg.out)
    print(f"wrote constants for {len(rows)} exponents to {cfg.out}/constants.csv")
    return EXIT_OK


SWEEP_HEADER = "m,delta,eps,mu,sigma,sigma_tilde,p,residual,iterations,h,L"


def _sweep_one_m(task):
    """Solve (or reload) the delta family of one m; returns meta rows."""
    m, cfg = task
    pot = SingularPotential(m)
    grid = UniformGrid(k=cfg.grid_k, L=cfg.grid_L)
    mdir = os.path.join(cfg.out, "waves", _mdir(m))
    deltas = sorted(cfg.delta, reverse=True)

    cached, missing = {}, []
    for d in deltas:
        wdir = os.path.join(mdir, _ddir(d))
        meta_path = os.path.join(wdir, "meta.json")
        if os.path.exists(meta_path):
            with open(meta_path) as f:
                meta = json.load(f)
            if meta.get("m") == m and meta.get("delta") == d \
                    and meta.get("L") == cfg.grid_L:
                cached[d] = meta
                continue
        missing.append(d)

    failures = []
    if missing:
        try:
            waves = solve_family(pot, missing, grid, tol=cfg.tol,
                                 max_iter=cfg.max_iter)
        except (NonConvergenceError, SingularityError) as exc:
            # partial-failure tolerant: redo one by one, flag the bad ones
            waves = []
            for d in sorted(missing, reverse=True):
                try:
                    waves.extend(solve_family(pot, [d], grid, tol=cfg.tol,
                                              max_iter=cfg.max_iter))
                except (NonConvergenceError, SingularityError) as exc2:
                    failures.append((d, f"{type(exc2).__name__}: {exc2}"))
        for w in waves:
            save_wave(os.path.join(mdir, _ddir(w.delta)), w)
            cached[w.delta] = json.load(
                open(os.path.join(mdir, _ddir(w.delta), "meta.json")))

    mb = limit_ode.mu_bar(m)
    rows = []
    for d in deltas:
        if d not in cached:
            continue
        meta = cached[d]
        sigma_tilde = meta["sigma"] * meta["eps"] ** m / mb**2
        rows.append([fmt17(m), fmt17(d), fmt17(meta["eps"]), fmt17(meta["mu"]),
                     fmt17(meta["sigma"]), fmt17(sigma_tilde), fmt17(meta["p"]),
                     fmt17(meta["residual"]), str(int(meta["iterations"])),
                     fmt17(meta["h"]), fmt17(meta["L"])])
    return m, rows, failures


def cmd_sweep(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    tasks = [(m, cfg) for m in sorted(cfg.m)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_sweep_one_m, tasks))
    else:
        results = [_sweep_one_m(t) for t in tasks]

    all_rows, all_failures = [], []
    for m, rows, failures in sorted(results, key=lambda r: r[0]):
        all_rows.extend(rows)
        all_failures.extend((m, d, msg) for d, msg in failures)
    write_csv(os.path.join(cfg.out, "sweep.csv"), SWEEP_HEADER, all_rows)
    echo_config(cfg, cfg.out)
    for m, d, msg in all_failures:
        print(f"FAILED m={fmt17(m)} delta={fmt17(d)}: {msg}", file=sys.stderr)
    print(f"wrote {len(all_rows)} sweep rows to {cfg.out}/sweep.csv"
          + (f" ({len(all_failures)} failures)" if all_failures else ""))
    return EXIT_NUMERICAL if all_failures else EXIT_OK


REPORT_HEADER = ("m,delta,k,eps,mu,sigma,sigma_tilde,p,residual,iterations,"
                 "err_S,err_W,err_T,glob_R,glob_V,glob_sigma,glob_total,"
                 "tail_sup_V,tail_int_V,tail_sup_R,tail_int_R,"
                 "lambda_emp,lambda_pred")


def _verify_one_m(task):
    m, cfg = task
    res = verify.verification_sweep(m, deltas=cfg.delta, L=cfg.grid_L,
                                    tol=cfg.tol, max_iter=cfg.max_iter)
    rows = []
    for r in res.rows:
        rows.append([fmt17(r.m), fmt17(r.delta), str(r.k), fmt17(r.eps),
                     fmt17(r.mu), fmt17(r.sigma), fmt17(r.sigma_tilde),
                     fmt17(r.p), fmt17(r.residual), str(r.iterations),
                     fmt17(r.err_S), fmt17(r.err_W), fmt17(r.err_T),
                     fmt17(r.glob.err_R), fmt17(r.glob.err_V),
                     fmt17(r.glob.err_sigma), fmt17(r.glob.total),
                     fmt17(r.tail.sup_V), fmt17(r.tail.int_V),
                     fmt17(r.tail.sup_R), fmt17(r.tail.int_R),
                     fmt17(r.tail.lambda_emp), fmt17(r.tail.lambda_pred)])
    fits = verify.profile_order_fits(res)
    eps = [r.eps for r in res.rows]
    mb = res.consts.mu_bar
    mu_lim = verify.richardson_limit(eps, [r.mu / r.eps for r in res.rows])
    sig_lim = verify.richardson_limit(eps, [r.sigma * r.eps**m for r in res.rows])
    gates = [
        ("order_S", fits["S"].slope, m - 1.5, m - 0.5),
        ("order_W", fits["W"].slope, m - 0.5, m + 0.5),
        ("order_T", fits["T"].slope, m - 1.5, m - 0.5),
        ("order_glob", fits["glob"].slope, m - 0.5, float("inf")),
        ("limit_mu_over_eps", mu_lim, 0.99 * mb, 1.01 * mb),
        ("limit_sigma_epsm", sig_lim, 0.99 * mb**2, 1.01 * mb**2),
    ]
    summary = [[fmt17(m), name, fmt17(val), fmt17(lo), fmt17(hi),
                "pass" if lo <= val <= hi else "FAIL"]
               for name, val, lo, hi in gates]
    ok = all(row[-1] == "pass" for row in summary)
    return m, rows, summary, ok


def cmd_verify(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    tasks = [(m, cfg) for m in sorted(cfg.m)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_verify_one_m, tasks))
    else:
        results = [_verify_one_m(t) for t in tasks]

    rows, summaries, all_ok = [], [], True
    for m, r, s, ok in sorted(results, key=lambda t: t[0]):
        rows.extend(r)
        summaries.extend(s)
        all_ok = all_ok and ok
    write_csv(os.path.join(cfg.out, "report.csv"), REPORT_HEADER, rows)
    write_csv(os.path.join(cfg.out, "summary.csv"),
              "m,check,value,window_lo,window_hi,status", summaries)
    echo_config(cfg, cfg.out)
    for row in summaries:
        print(" ".join(row))
    return EXIT_OK if all_ok else EXIT_NUMERICAL


EXPAND_HEADER = ("m,delta,k,mu,integral,lead,second,remainder,order_scale,valid")


def cmd_expand(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    rows = []
    for m in sorted(cfg.m):
        pot = SingularPotential(m)
        lp = limit_ode.integrate_limit(m, xmax=cfg.ode_xmax, step=cfg.ode_step)
        consts = limit_ode.asymptotic_constants(lp)
        testfn = verify.gaussian_test()
        warm = None
        mus, rems = [], []
        for d in sorted(cfg.delta, reverse=True):
            pair = verify.solve_pair(pot, d, verify.weak_star_k_for(d), L=cfg.grid_L,
                                     tol=cfg.tol, max_iter=cfg.max_iter, warm=warm)
            warm = pair
            w = verify.extrapolate_pair(*pair)
            rep = verify.weak_star_check(w, consts, testfn)
            rows.append([fmt17(m), fmt17(d), str(pair[0].grid.k), fmt17(rep.mu),
                         fmt17(rep.integral), fmt17(rep.lead), fmt17(rep.second),
                         fmt17(rep.remainder), fmt17(rep.order_scale),
                         str(rep.valid).lower()])
            if rep.valid:
                mus.append(rep.mu)
                rems.append(abs(rep.remainder))
        if len(mus) >= 4:
            fit = verify.rate_fit(mus, rems)
            print(f"m={fmt17(m)} remainder_slope={fmt17(fit.slope)} "
                  f"r2={fmt17(fit.r_squared)}")
    write_csv(os.path.join(cfg.out, "expand.csv"), EXPAND_HEADER, rows)
    echo_config(cfg, cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing and dispatch.


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fpuwaves",
        description="Solitary waves of singular FPU-type chains: solver, "
                    "limit ODE, asymptotic constants, verification sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [("solve", cmd_solve), ("limit", cmd_limit),
                     ("constants", cmd_constants), ("sweep", cmd_sweep),
                     ("verify", cmd_verify), ("expand", cmd_expand)]:
        p = sub.add_parser(name)
        p.set_defaults(func=fn)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--m", type=float, action="append",
                       help="potential exponent (repeatable)")
        p.add_argument("--delta", type=float, action="append",
                       help="norm gap (repeatable)")
        p.add_argument("--grid-k", type=int, dest="grid_k")
        p.add_argument("--grid-L", type=float, dest="grid_L")
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--ode-xmax", type=float, dest="ode_xmax")
        p.add_argument("--ode-step", type=float, dest="ode_step")
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.func(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NonConvergenceError, SingularityError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
