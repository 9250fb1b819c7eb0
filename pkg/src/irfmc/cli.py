"""Command-line front end: ``irfmc {sample,check,lasso-demo,surface}``.

Exit codes: 0 success/pass, 1 runtime failure or failed check, 2 usage error
(including unknown targets). Data files depend only on flags and seed;
wall-clock timings go to a separate ``timings.json``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import check_gradient
from .decomposition import run_decomposed
from .diagnostics import ks_distance, stationarity_residual_decomposed, stationarity_residual_main
from .distributions import ZOO, get_target
from .hit_and_run import SamplerConfig, run, transition_function_surface
from .langevin import run_langevin

STATIONARITY_TOL = 1e-3
GRADIENT_TOL = 1e-5


class UsageError(Exception):
    pass


def _target(name):
    try:
        return get_target(name)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc).strip("'\"")) from exc


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", newline="")


def _write_csv(path, header, rows):
    fh = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if not isinstance(v, (int, np.integer)) else int(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------- sample


def cmd_sample(args) -> int:
    t = _target(args.target)
    if args.sampler == "irf":
        x0 = None if args.x0 is None else [args.x0]
        batch = run(t.potential, SamplerConfig(args.steps, args.seed, args.axis_hold, args.burn_in), x0=x0)
    elif args.sampler == "decomposed":
        if t.decomposition is None:
            raise UsageError(f"{t.name} has no monotone decomposition")
        batch = run_decomposed(t.decomposition, args.steps, args.seed, args.x0, args.burn_in)
    else:
        batch = run_langevin(t.potential, args.steps, args.seed, x0=args.x0, eta=args.eta, burn_in=args.burn_in)
    d = batch.positions.shape[1]
    rows = ([i, *batch.positions[i]] for i in range(len(batch)))
    _write_csv(args.out, ["step"] + [f"x{j + 1}" for j in range(d)], rows)
    return 0


# ---------------------------------------------------------------- check


def _check_one(name, args) -> dict:
    t = _target(name)
    if args.kind == "stationarity":
        if args.kernel == "decomposed":
            res = stationarity_residual_decomposed(t, args.grid, full_step=args.negative_control)
        else:
            res = stationarity_residual_main(t, args.grid, positive_part=not args.negative_control)
        stat, thr = res.residual, STATIONARITY_TOL
    elif args.kind == "ks":
        batch = run(t.potential, SamplerConfig(args.steps, args.seed))
        stat, thr = ks_distance(batch.positions[:, 0], t.cdf), t.ks_tol
    else:
        a, b = t.test_window
        pts = np.linspace(a, b, 21)
        stat, thr = max(check_gradient(t.potential, [x]) for x in pts), GRADIENT_TOL
    return {"target": t.name, "kind": args.kind, "statistic": float(stat), "threshold": thr,
            "pass": bool(stat < thr)}


def cmd_check(args) -> int:
    names = ZOO if args.target == "all" else (args.target,)
    for n in names:
        _target(n)
    reports = [_check_one(n, args) for n in names]
    if args.target == "all":
        _dump({"kind": args.kind, "reports": reports, "passed": sum(r["pass"] for r in reports),
               "total": len(reports), "pass": all(r["pass"] for r in reports)})
    else:
        _dump(reports[0])
    return 0 if all(r["pass"] for r in reports) else 1


# ---------------------------------------------------------------- lasso demo


def _workers(requested):
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("IRFMC_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, min(os.cpu_count() or 1, 8))


def cmd_lasso_demo(args) -> int:
    from .selective import ReplicateConfig, run_replicate, summarize

    cfg = ReplicateConfig(n=args.n, p=args.p, rho=args.rho, lasso_penalty=args.lam, randomization=args.rand,
                          steps=args.steps, langevin_steps=args.langevin_steps, langevin_eta=args.langevin_eta,
                          level=args.level)
    seeds = np.random.SeedSequence(args.seed).spawn(args.reps)
    start = time.perf_counter()
    workers = _workers(args.workers)
    if workers == 1:
        records = [run_replicate(s, cfg) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_replicate, seeds, [cfg] * len(seeds)))
    elapsed = time.perf_counter() - start

    summary = summarize(records)
    os.makedirs(args.out, exist_ok=True)
    timings = {"total": elapsed, "workers": workers, "replicates": []}
    for i, rec in enumerate(records):
        timings["replicates"].append(rec.pop("timings"))
        rec = {"replicate": i, **rec}
        _dump(rec, os.path.join(args.out, f"replicate_{i:03d}.json"))
    for method in summary:
        timings[method] = summary[method].pop("wall_time")
    report = {
        "config": {"n": cfg.n, "p": cfg.p, "rho": cfg.rho, "lam": cfg.lasso_penalty, "rand": cfg.randomization,
                   "reps": args.reps, "steps": cfg.steps, "langevin_steps": cfg.langevin_budget(),
                   "langevin_eta": cfg.langevin_eta if cfg.langevin_eta is not None else 1.0 / cfg.p**2,
                   "level": cfg.level, "seed": args.seed},
        "methods": [{"method": m, **summary[m]} for m in ("irf", "langevin", "naive")],
        "replicates_with_selection": sum(1 for r in records if r["active"]),
    }
    _dump(report, os.path.join(args.out, "summary.json"))
    _dump(timings, os.path.join(args.out, "timings.json"))
    _dump(report)
    return 0


# ---------------------------------------------------------------- surface


def cmd_surface(args) -> int:
    t = _target(args.target)
    if t.potential.dim != 1:
        raise UsageError("surface needs a 1-D target")
    if not t.potential.domain.contains([args.x]):
        raise UsageError(f"x={args.x} is outside the domain of {t.name}")
    V = np.linspace(0.0, 1.0, args.grid + 2)[1:-1]
    surf = transition_function_surface(t.potential, args.x, V)
    _write_csv(args.out, ["V", "f_minus", "f_plus"], zip(V, surf[0], surf[1]))
    return 0


# ---------------------------------------------------------------- parser


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="irfmc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw a chain for a named target, CSV out")
    s.add_argument("target", help="e.g. gaussian:0:1, beta:0.5:0.5")
    s.add_argument("--steps", type=_positive_int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--x0", type=float, default=None)
    s.add_argument("--axis-hold", type=_positive_int, default=1)
    s.add_argument("--burn-in", type=int, default=0)
    s.add_argument("--sampler", choices=("irf", "decomposed", "langevin"), default="irf")
    s.add_argument("--eta", type=float, default=None, help="Langevin step size")
    s.add_argument("--out", default=None, help="CSV path (default stdout)")
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("check", help="stationarity / KS / gradient check, JSON report")
    c.add_argument("target", help="named target or 'all'")
    c.add_argument("--kind", choices=("stationarity", "ks", "gradient"), default="stationarity")
    c.add_argument("--kernel", choices=("main", "decomposed"), default="main")
    c.add_argument("--negative-control", action="store_true", help="use a deliberately wrong kernel")
    c.add_argument("--grid", type=_positive_int, default=2001)
    c.add_argument("--steps", type=_positive_int, default=50_000)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("lasso-demo", help="selective inference coverage study")
    d.add_argument("--n", type=_positive_int, default=100)
    d.add_argument("--p", type=_positive_int, default=40)
    d.add_argument("--rho", type=float, default=0.3)
    d.add_argument("--lam", type=float, default=1.4)
    d.add_argument("--rand", choices=("gaussian", "laplace"), default="gaussian")
    d.add_argument("--reps", type=_positive_int, default=100)
    d.add_argument("--steps", type=_positive_int, default=1000)
    d.add_argument("--langevin-steps", type=_positive_int, default=None)
    d.add_argument("--langevin-eta", type=float, default=None)
    d.add_argument("--level", type=float, default=0.9)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--workers", type=int, default=None, help="processes (default $IRFMC_WORKERS or cores)")
    d.add_argument("--out", default="lasso_demo")
    d.set_defaults(func=cmd_lasso_demo)

    f = sub.add_parser("surface", help="transition map f_{V,v}(x) over a V grid, CSV out")
    f.add_argument("--target", default="gaussian:0:1")
    f.add_argument("--x", type=float, default=-1.0)
    f.add_argument("--grid", type=_positive_int, default=101)
    f.add_argument("--out", default=None)
    f.set_defaults(func=cmd_surface)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"irfmc: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, ArithmeticError, OSError) as exc:
        print(f"irfmc: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
