"""Command-line harness.

Subcommands:
  maps eval     -- evaluate a catalog map at a point
  check         -- hypothesis battery for a family member (JSON report)
  lyapunov      -- exponent estimation for the configured cocycle
  curves run    -- admissible-curve / ledger battery
  reproduce P   -- run preset P end to end (CSV + JSON outputs)

Exit codes: 0 all checks passed, 1 completed with failed checks,
2 configuration or runtime error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from skewlab.config import ExperimentConfig
from skewlab import maps
from skewlab.cones import delta_cone, standard_critical_region
from skewlab import hypotheses as hyp
from skewlab.lyapunov import CocycleDriver, lyapunov_spectrum, \
    expanding_base_cocycle, compare_bounds
from skewlab import presets
from skewlab import reports


def _config_from(args) -> ExperimentConfig:
    cfg = ExperimentConfig({})
    if getattr(args, "config", None):
        cfg = ExperimentConfig.load(args.config)
    overrides = {}
    for key, attr in [("map.family", "family"), ("map.r", "r"),
                      ("map.tau", "tau"), ("map.tau1", "tau1"),
                      ("map.tau2", "tau2"), ("map.tau3", "tau3"),
                      ("run.n", "n"), ("run.qr_period", "qr_period"),
                      ("run.burn_in", "burn_in"), ("run.mode", "mode"),
                      ("shift.k", "k"),
                      ("check.sigma", "sigma"), ("check.grid_n", "grid_n")]:
        v = getattr(args, attr, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "seeds", None) is not None:
        overrides["run.seeds"] = [int(s) for s in args.seeds.split(",")]
    if overrides:
        cfg = cfg.updated(**overrides)
    return cfg


def _fiber_from_cfg(cfg: ExperimentConfig):
    family = cfg.get("map.family", "standard")
    kw = {}
    for k in ("r", "tau", "tau1", "tau2", "tau3", "d"):
        v = cfg.get(f"map.{k}")
        if v is not None:
            kw[k] = v
    return maps.make_fiber(family, **kw)


def cmd_maps_eval(args) -> int:
    cfg = _config_from(args)
    fiber = _fiber_from_cfg(cfg)
    pt = np.array([float(x) for x in args.point.split(",")])
    if len(pt) != fiber.dim:
        print(f"error: point has {len(pt)} coordinates, map needs {fiber.dim}",
              file=sys.stderr)
        return 2
    out = fiber(pt)[0]
    jac = fiber.jacobian(pt)[0]
    print("image:", ",".join(repr(float(v)) for v in out))
    print("jacobian_det:", repr(float(np.linalg.det(jac))))
    return 0


def cmd_check(args) -> int:
    cfg = _config_from(args)
    res = presets.run_preset("hypotheses", cfg, args.out)
    print(f"hypotheses: {'PASS' if res['passed'] else 'FAIL'} "
          f"-> {res['paths']['json']}")
    return 0 if res["passed"] else 1


def cmd_lyapunov(args) -> int:
    cfg = _config_from(args)
    mode = cfg.get("run.mode", "iid-kick")
    fiber = _fiber_from_cfg(cfg)
    n = int(cfg.get("run.n", 100_000))
    seeds = cfg.get("run.seeds", list(range(10)))
    seeds = [int(s) for s in (seeds if isinstance(seeds, list) else [seeds])]
    qr = int(cfg.get("run.qr_period", 1))
    burn = int(cfg.get("run.burn_in", 1000))
    if mode == "expanding-base":
        rep = expanding_base_cocycle(int(cfg.get("shift.k", 2)),
                                     float(cfg.require("map.r")),
                                     n=n, qr_period=qr, burn_in=burn,
                                     seeds=seeds, fiber=fiber)
    elif mode == "markov-shift":
        t = int(cfg.get("shift.symbols", 2))
        C = np.ones((t, t), dtype=int) if cfg.get("shift.matrix") is None \
            else cfg.matrix("shift.matrix", t)
        rep = lyapunov_spectrum(fiber, CocycleDriver("markov-shift",
                                                     transition_matrix=C),
                                n=n, qr_period=qr, burn_in=burn, seeds=seeds)
    elif mode == "deterministic-skew":
        base = maps.cat_map() if cfg.get("base.matrix") is None else \
            maps.ToralAutomorphism(cfg.matrix("base.matrix",
                                              int(cfg.get("base.dim", 2))))
        skew = maps.build_skew(base, int(cfg.get("base.iterates", 4)),
                               int(cfg.get("kick.iterates", 2)), fiber)
        rep = lyapunov_spectrum(skew, n=n, qr_period=qr, burn_in=burn,
                                seeds=seeds)
    else:
        rep = lyapunov_spectrum(fiber, CocycleDriver("iid-kick"), n=n,
                                qr_period=qr, burn_in=burn, seeds=seeds)
    if args.bound is not None:
        compare_bounds(rep, [{"name": "cli_bound",
                              "kind": "every_seed_lambda1_gt",
                              "value": float(args.bound)}])
    paths = reports.emit_report(rep, args.out, "lyapunov", config=cfg)
    print(f"exponents: {['%.5f' % v for v in rep.exponents]} "
          f"sum_abs={rep.sum_abs:.2e} -> {paths['csv']}")
    bad = rep.diverged or any(not c["passed"] for c in rep.bound_comparisons)
    return 1 if bad else 0


def cmd_curves_run(args) -> int:
    cfg = _config_from(args)
    res = presets.run_preset("curves", cfg, args.out)
    print(f"curves: {'PASS' if res['passed'] else 'FAIL'} "
          f"-> {res['paths']['json']}")
    return 0 if res["passed"] else 1


def cmd_reproduce(args) -> int:
    cfg = _config_from(args)
    res = presets.run_preset(args.preset, cfg, args.out)
    rep = res.get("report")
    if hasattr(rep, "bound_comparisons"):
        for c in rep.bound_comparisons:
            tick = "PASS" if c["passed"] else "FAIL"
            print(f"  [{tick}] {c['name']}: observed {c['observed']:.5f} "
                  f"vs bound {c['bound']:.5f}")
    print(f"{args.preset}: {'PASS' if res['passed'] else 'FAIL'}")
    return 0 if res["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skewlab",
                                 description="skew-product laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--family", help="map family name")
        p.add_argument("--r", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--tau1", type=float)
        p.add_argument("--tau2", type=float)
        p.add_argument("--tau3", type=float)
        p.add_argument("--n", type=int)
        p.add_argument("--seeds", help="comma-separated seed list")
        p.add_argument("--qr-period", dest="qr_period", type=int)
        p.add_argument("--burn-in", dest="burn_in", type=int)

    pm = sub.add_parser("maps", help="map catalog")
    pmsub = pm.add_subparsers(dest="maps_command", required=True)
    pe = pmsub.add_parser("eval", help="evaluate a map at a point")
    common(pe)
    pe.add_argument("--point", required=True, help="comma-separated coordinates")
    pe.set_defaults(fn=cmd_maps_eval)

    pc = sub.add_parser("check", help="hypothesis battery")
    common(pc)
    pc.add_argument("--sigma", type=int)
    pc.add_argument("--grid-n", dest="grid_n", type=int)
    pc.set_defaults(fn=cmd_check)

    pl = sub.add_parser("lyapunov", help="exponent estimation")
    common(pl)
    pl.add_argument("--mode", choices=["iid-kick", "markov-shift",
                                       "expanding-base", "deterministic-skew"])
    pl.add_argument("--k", type=int, help="expanding-base multiplier")
    pl.add_argument("--bound", type=float, help="assert lambda1 > bound")
    pl.set_defaults(fn=cmd_lyapunov)

    pcv = sub.add_parser("curves", help="curve machinery")
    pcvsub = pcv.add_subparsers(dest="curves_command", required=True)
    pr = pcvsub.add_parser("run", help="run the curve battery")
    common(pr)
    pr.set_defaults(fn=cmd_curves_run)

    pp = sub.add_parser("reproduce", help="run a named preset")
    common(pp)
    pp.add_argument("preset", choices=sorted(presets.PRESETS))
    pp.add_argument("--k", type=int, help="expanding-base multiplier")
    pp.set_defaults(fn=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
