"""Command-line front end.

Each subcommand builds a RunConfig (from ``--config`` and flags), runs the
pipeline and writes one table.  Exit status: 0 success, 2 configuration
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from itertools import product
from math import pi

import numpy as np

from . import __version__
from . import continuation as cont
from . import dynamics as dyn
from .config import COMMANDS, MODELS, RunConfig, load, parse_orientation
from .eigen import (NEWTON_MAXITER, ROOT_TOL, complex_smallest, joint_solution_scan, real_family)
from .errors import ConfigError, LatticeSnakeError
from .lateterms import RICHARDSON_WINDOW, extract_lambda, iterate_recurrence
from .lattice import make_orientation, stencil, symbol
from .model import builtin, maxwell
from .output import write
from .predict import (SnakeParams, ladder_rungs, pinning_width, proxy_measure, rung_L,
                      scaled_constants, snake_branch, unscaled_width)


def _orientation(cfg: RunConfig, m):
    return make_orientation(m[0], m[1], cfg.kind)


def _lambda(cfg: RunConfig, o) -> float:
    """Signed Lambda: the override (taken as negative) or the recurrence estimate."""
    if cfg.lambda_abs is not None:
        return -cfg.lambda_abs
    return extract_lambda(iterate_recurrence(cfg.model, o, cfg.n_max)).value


def _meta(cfg: RunConfig, **extra) -> dict:
    meta = {"config_hash": cfg.config_hash(), "version": __version__}
    if cfg.echo_metadata:
        meta["config"] = cfg.result_lines()
    meta.update(extra)
    return meta


def _single(cfg: RunConfig):
    if len(cfg.s) != 1 or len(cfg.orient) != 1:
        raise ConfigError(f"{cfg.command} takes one s and one orient; use width or compare "
                          "for sweeps")
    return cfg.s[0], cfg.orient[0]


def _map(cfg: RunConfig, fn, tasks) -> list:
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


# ---- eigen ----

def run_eigen(cfg: RunConfig) -> int:
    rows, joint = [], {}
    st = stencil(cfg.kind)
    for m in cfg.orient:
        o = _orientation(cfg, m)
        for M, k in enumerate(real_family(o, None, cfg.M_max), 1):
            rows.append((o.kind, o.m1, o.m2, "real", M, k, 0.0, k, abs(symbol(st, o, k))))
        K = complex_smallest(o)
        if K is not None:
            rows.append((o.kind, o.m1, o.m2, "complex", None, K.real, K.imag, abs(K),
                         abs(symbol(st, o, K))))
        if cfg.scan_appendix:
            scan = joint_solution_scan(o, None, cfg.grid_n)
            for k in scan["joint_roots"]:
                rows.append((o.kind, o.m1, o.m2, "joint", None, k.real, k.imag, abs(k),
                             abs(symbol(st, o, k))))
            joint[o.label()] = {"joint_roots": len(scan["joint_roots"]),
                                "candidates_checked": scan["candidates_checked"],
                                "box": scan["box"], "grid_n": scan["grid_n"]}
    meta = _meta(cfg, root_tol=ROOT_TOL, newton_maxiter=NEWTON_MAXITER)
    if cfg.scan_appendix:
        meta["joint_scan"] = joint
    write(cfg.output, "eigen", rows, meta, cfg.fmt)
    return 0


# ---- lambda ----

def run_lambda(cfg: RunConfig) -> int:
    if len(cfg.orient) != 1:
        raise ConfigError("lambda takes one orient")
    o = _orientation(cfg, cfg.orient[0])
    run = iterate_recurrence(cfg.model, o, cfg.n_max)
    est = extract_lambda(run)
    rows = [(n, run.V[n], e) for n, e in enumerate(est.estimates, 1)]
    meta = _meta(cfg, model=cfg.model, orientation=o.label(), lambda_value=est.value,
                 converged=est.converged, dominance=est.dominance, prefactor=est.prefactor,
                 n_used=est.n_used, richardson_window=RICHARDSON_WINDOW)
    write(cfg.output, "lambda", rows, meta, cfg.fmt)
    print(f"lambda {o.label()} {cfg.model}: {est.value:.6g}", file=sys.stderr)
    return 0


# ---- width ----

def _width_task(args):
    cfg, m, s = args
    o = _orientation(cfg, m)
    lam = abs(_lambda(cfg, o))
    spec = builtin(cfg.model)
    eps = spec.eps(s)
    Ws = pinning_width(scaled_constants(cfg.model), o, None, eps, lam)
    return (cfg.model, o.kind, o.m1, o.m2, s, eps, lam, Ws, unscaled_width(cfg.model, o, s, lam))


def run_width(cfg: RunConfig) -> int:
    tasks = [(cfg, m, s) for m, s in product(cfg.orient, cfg.s)]
    rows = _map(cfg, _width_task, tasks)
    write(cfg.output, "width", rows, _meta(cfg, units="width in r_hat; width_scaled in r"),
          cfg.fmt)
    return 0


# ---- diagram ----

def _diagram_rows(cfg: RunConfig, s: float, o) -> tuple:
    lam = _lambda(cfg, o)
    fa = scaled_constants(cfg.model)
    spec = builtin(cfg.model)
    params = SnakeParams(spec.eps(s), abs(lam), pi if lam < 0 else 0.0)
    if cfg.L_min is None:
        window = (rung_L(fa, o, params, 1), rung_L(fa, o, params, 8))
    else:
        window = (cfg.L_min, cfg.L_max)
    L_grid = np.linspace(window[0], window[1], cfg.n_samples * 8)
    mx = maxwell(builtin(cfg.model, 1.0))
    domain = 2 * window[1]

    def proxy(L):
        return float(proxy_measure(L, params.eps, mx.u_minus, mx.u_plus, domain))

    rows = []
    for curve, parity in (("snake_site", "even"), ("snake_bond", "odd")):
        for L, dr in snake_branch(fa, o, params, parity, L_grid):
            rows.append((s, curve, None, L, None, dr, proxy(L)))
    for rung in ladder_rungs(fa, o, params, L_window=window, n_samples=cfg.n_samples):
        for z0, dr in rung["samples"]:
            rows.append((s, "rung", rung["k"], rung["L"], z0, dr, proxy(rung["L"])))
    info = {"s_hat": s, "eps": params.eps, "lambda": lam,
            "width": pinning_width(fa, o, None, params.eps, abs(lam)),
            "L_window": list(window), "proxy_domain": domain}
    return rows, info


def _diagram_task(args):
    cfg, m, s = args
    return _diagram_rows(cfg, s, _orientation(cfg, m))


def run_diagram(cfg: RunConfig) -> int:
    if len(cfg.orient) != 1:
        raise ConfigError("diagram takes one orient (s may be swept)")
    res = _map(cfg, _diagram_task, [(cfg, cfg.orient[0], s) for s in cfg.s])
    rows = [r for part, _ in res for r in part]
    meta = _meta(cfg, variables="scaled (L, delta_r)", points=[i for _, i in res],
                 measure_proxy="u_minus*domain + (u_plus-u_minus)*L/eps; a visual stand-in, "
                               "not sum(u)")
    write(cfg.output, "diagram", rows, meta, cfg.fmt)
    return 0


# ---- continue ----

def run_continue(cfg: RunConfig) -> int:
    s, m = _single(cfg)
    o = _orientation(cfg, m)
    spec = builtin(cfg.model, s)
    p, u = cont.pinned_front(spec, o, cfg.J, cfg.center)
    b = cont.continue_branch(p, u, p.r, None, cont.StopPolicy(max_folds=cfg.max_folds))
    audit = cont.audit_branch(p, b)
    meas = cont.measure_pinning_width(b, cfg.skip_folds)
    step = cont.StepPolicy()
    meta = _meta(cfg, J=p.J, center=p.center, r_maxwell=p.r, folds=[f.r for f in b.folds],
                 width=meas.width, r_left=meas.r_left, r_right=meas.r_right,
                 folds_used=meas.folds_used, audit_residual=audit,
                 stop_reason=b.meta["stop_reason"], residual_tol=step.tol,
                 fold_rtol=cont.FOLD_RTOL, ds_bounds=[step.ds_min, step.ds_max])
    if cfg.rungs:
        if p.center != "site":
            raise ConfigError("rungs start from the site-centred snake; use center=site")
        rung_rows, rung_info = _rungs(p, b, cfg)
        meta["rungs"] = rung_info
        if cfg.rung_output:
            write(cfg.rung_output, "rung", rung_rows, _meta(cfg, rungs=rung_info), cfg.fmt)
    write(cfg.output, "branch", cont.branch_rows(b), meta, cfg.fmt)
    if cfg.state_output:
        last = b.points[-1]
        write(cfg.state_output, "state", cont.state_rows(p, last.u),
              _meta(cfg, r=last.r, point=len(b.points) - 1), cfg.fmt)
    return 0


def _rungs(p, b, cfg: RunConfig) -> tuple:
    sbs = cont.symmetry_breaking_points(p, b)
    # skip the turns affected by the skew, as for the width
    chosen = (sbs[cfg.skip_folds:] or sbs)[: cfg.rungs]
    rows, info = [], []
    for i, sb in enumerate(chosen):
        rg = cont.continue_rung(p, sb)
        audit = cont.audit_branch(rg.problem, rg.branch)
        n = len(rg.branch.points)
        rows += [(i, j, q.r, q.measure, int(j == n - 1)) for j, q in enumerate(rg.branch.points)]
        info.append({"start_r": sb.r, "end_r": rg.end_r, "bond_center": rg.bond_center,
                     "end_bond_asymmetry": rg.end_asymmetry, "points": n,
                     "audit_residual": audit})
    return rows, info


# ---- depin ----

def run_depin(cfg: RunConfig) -> int:
    s, m = _single(cfg)
    o = _orientation(cfg, m)
    spec = builtin(cfg.model, s)
    W = unscaled_width(cfg.model, o, s, abs(_lambda(cfg, o)))
    half = W / 2
    p, u0 = dyn.stable_front(spec, o, cfg.J)
    rM = p.r
    tol = cfg.tol if cfg.tol is not None else W / 50
    rows, found = [], {}
    sides = ("left", "right") if cfg.side == "both" else (cfg.side,)
    for side in sides:
        sg = 1 if side == "right" else -1
        bracket = (rM + sg * cfg.bracket_inner * half, rM + sg * cfg.bracket_outer * half)
        thr = dyn.depinning_threshold(p, side, bracket, u0, cfg.T, tol, cfg.dt)
        found[side] = thr
        rows.append((side, thr, thr - rM, half, abs(thr - rM) / half))
    meta = _meta(cfg, J=p.J, r_maxwell=rM, width_analytic=W, tol=tol, T=cfg.T,
                 half_width_convention="analytic half-width taken as W/2, W compared with the "
                                       "numeric full extent",
                 ratio_to_width={k: abs(v - rM) / W for k, v in found.items()})
    if cfg.trajectory_output:
        r = cfg.trajectory_r if cfg.trajectory_r is not None else rM
        dt = cfg.dt or 0.9 * dyn.stable_dt(p, u0, r)
        tr = dyn.evolve(p, u0, dt, cfg.T, r)
        write(cfg.trajectory_output, "trajectory", list(zip(tr.times, tr.front_positions)),
              _meta(cfg, r=r, drift_velocity=tr.drift_velocity, pinned=tr.pinned,
                    hopped=tr.hopped), cfg.fmt)
    write(cfg.output, "depin", rows, meta, cfg.fmt)
    return 0


# ---- compare ----

def _compare_task(args):
    cfg, m, s = args
    o = _orientation(cfg, m)
    spec = builtin(cfg.model, s)
    W = unscaled_width(cfg.model, o, s, abs(_lambda(cfg, o)))
    meas, b, p = cont.snake_width(spec, o, cfg.J, cfg.skip_folds, cfg.max_folds)
    cont.audit_branch(p, b)
    full = meas.width
    return (cfg.model, o.m1, o.m2, s, p.J, full, full / 2, W, abs(full - W) / W,
            abs(full / 2 - W) / W, meas.folds_used)


def run_compare(cfg: RunConfig) -> int:
    tasks = [(cfg, m, s) for m, s in product(cfg.orient, cfg.s)]
    rows = _map(cfg, _compare_task, tasks)
    meta = _meta(cfg, residual_tol=cont.RESIDUAL_TOL, fold_rtol=cont.FOLD_RTOL,
                 rel_err="|width_numeric - width_analytic| / width_analytic",
                 rel_err_half="|width_numeric/2 - width_analytic| / width_analytic")
    write(cfg.output, "compare", rows, meta, cfg.fmt)
    return 0


RUNNERS = {"eigen": run_eigen, "lambda": run_lambda, "width": run_width,
           "diagram": run_diagram, "continue": run_continue, "depin": run_depin,
           "compare": run_compare}


# ---- argument parsing ----

def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latticesnake",
                                 description="Pinning and snaking of fronts on rotated lattices.")
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--model", choices=MODELS)
    common.add_argument("--s", dest="s", action="append", type=_floats,
                        help="s_hat value(s); repeat or comma-separate for a sweep")
    common.add_argument("--orient", action="append", type=parse_orientation,
                        help="m1,m2 (repeatable)")
    common.add_argument("--kind", choices=("square", "hex"))
    common.add_argument("-o", "--output", help="output file (default stdout)")
    common.add_argument("--json", action="store_true", help="write JSON instead of CSV")
    common.add_argument("--J", type=int, help="effective lattice points (half domain)")
    common.add_argument("--n-max", type=int, dest="n_max")
    common.add_argument("--lambda", type=float, dest="lambda_abs",
                        help="|Lambda| override (needed off the axis and diagonal)")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")
    common.add_argument("--no-meta-echo", action="store_true",
                        help="leave the config echo out of the metadata block")
    common.add_argument("--dump-config", action="store_true",
                        help="print the effective config and exit")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    helps = {"eigen": "real family and smallest complex root of the lattice symbol",
             "lambda": "late-term recurrence and Lambda extraction trace",
             "width": "analytic pinning width over an s_hat sweep",
             "diagram": "analytic snakes and rungs as (L, delta_r) point sets",
             "continue": "numerical snake by arclength continuation, with measured width",
             "depin": "depinning thresholds by time stepping",
             "compare": "analytic against numerical width"}
    ps = {c: sub.add_parser(c, parents=[common], help=helps[c]) for c in COMMANDS}
    ps["eigen"].add_argument("--scan-appendix", action="store_true",
                             help="also scan for double roots off the real axis")
    ps["eigen"].add_argument("--grid-n", type=int, dest="grid_n")
    ps["eigen"].add_argument("--M-max", type=int, dest="M_max")
    ps["diagram"].add_argument("--L-window", type=_floats, dest="L_window",
                               help="L_min,L_max in scaled units")
    ps["diagram"].add_argument("--n-samples", type=int, dest="n_samples")
    for c in ("continue", "compare"):
        ps[c].add_argument("--skip-folds", type=int, dest="skip_folds")
        ps[c].add_argument("--max-folds", type=int, dest="max_folds")
    ps["continue"].add_argument("--center", choices=("site", "bond"))
    ps["continue"].add_argument("--rungs", type=int, help="number of rungs to follow")
    ps["continue"].add_argument("--state-output", dest="state_output")
    ps["continue"].add_argument("--rung-output", dest="rung_output")
    ps["depin"].add_argument("--side", choices=("left", "right", "both"))
    ps["depin"].add_argument("--bracket", type=_floats,
                             help="inner,outer offsets in units of the analytic half-width")
    ps["depin"].add_argument("--T", type=float, dest="T")
    ps["depin"].add_argument("--dt", type=float)
    ps["depin"].add_argument("--tol", type=float)
    ps["depin"].add_argument("--trajectory-output", dest="trajectory_output")
    ps["depin"].add_argument("--trajectory-r", type=float, dest="trajectory_r")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = load(ns.config) if ns.config else RunConfig(command=ns.command)
    if cfg.command != ns.command:
        raise ConfigError(f"config file is for {cfg.command!r}, command line says {ns.command!r}")
    over = {}
    skip = {"config", "command", "s", "json", "no_meta_echo", "dump_config", "L_window",
            "bracket"}
    for k, v in vars(ns).items():
        if k not in skip and v is not None:
            over[k] = v
    if ns.s:
        over["s"] = [x for group in ns.s for x in group]
    if ns.json:
        over["fmt"] = "json"
    if ns.no_meta_echo:
        over["echo_metadata"] = False
    if getattr(ns, "L_window", None):
        if len(ns.L_window) != 2:
            raise ConfigError("--L-window takes L_min,L_max")
        over["L_min"], over["L_max"] = ns.L_window
    if getattr(ns, "bracket", None):
        if len(ns.bracket) != 2:
            raise ConfigError("--bracket takes inner,outer")
        over["bracket_inner"], over["bracket_outer"] = ns.bracket
    if ns.scan_appendix if hasattr(ns, "scan_appendix") else False:
        over["scan_appendix"] = True
    elif "scan_appendix" in over and not over["scan_appendix"]:
        del over["scan_appendix"]
    return replace(cfg, **over).validate()


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if ns.dump_config:
            sys.stdout.write(cfg.dumps())
            return 0
        return RUNNERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LatticeSnakeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
