"""Command line entry point ``rvm <mode>``.

Exit codes: 0 success, 1-125 number of failed checks (capped), 126
configuration or parameter error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .config import MODES, default_config, load_config
from .errors import ConfigError, IntegrationError, ParameterError

EXIT_CONFIG = 126


def _build_parser():
    ap = argparse.ArgumentParser(prog="rvm", description="Radiation-damped relativistic "
                                 "Vlasov-Maxwell: simulation, tracing and verification.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="JSON configuration file (defaults apply when omitted)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, help="override the configuration seed")
    k = ap.add_argument_group("kernels mode")
    k.add_argument("--samples", type=int, help="random kernel samples")
    k.add_argument("--pmax", type=float, help="largest sampled |p|")
    k.add_argument("--report", help="path of the JSON bound report")
    o = ap.add_argument_group("ode mode")
    o.add_argument("--C", type=float, dest="C")
    o.add_argument("--W0", type=float)
    o.add_argument("--Z0", type=float)
    o.add_argument("--t", type=float, dest="t")
    o.add_argument("--dt", type=float)
    return ap


def _resolve(args):
    cfg = load_config(args.config) if args.config else default_config()
    over = {"mode": args.mode}
    if args.seed is not None:
        over["seed"] = args.seed
    kb = {k: v for k, v in (("samples", args.samples), ("pmax", args.pmax)) if v is not None}
    if kb:
        over["kernels"] = kb
    ob = {k: getattr(args, k) for k in ("C", "W0", "Z0", "t", "dt") if getattr(args, k) is not None}
    if ob:
        over["ode"] = ob
    return cfg.with_overrides(**over)


def _out_path(out, name):
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(cfg, files, summary):
    return dict(package_version=__version__, config=cfg.to_dict(), seed=cfg.seed,
                files=files, summary=summary)


def cmd_simulate(cfg, args):
    from .kinetic import run

    res = run(cfg, args.out)
    s = res.series
    charge = s["charge"]
    checks = {
        "envelope audit <= 1 + 1e-6": res.max_audit <= 1.0 + 1e-6,
        "Gauss residual <= 1e-10": float(np.max(s["gauss_residual"])) <= 1e-10,
        "charge drift <= 1e-12": float(np.max(np.abs(charge - charge[0])))
        <= 1e-12 * max(abs(charge[0]), 1e-300),
    }
    print(f"steps={res.state.step} time={res.state.time:.6g} max_audit={res.max_audit:.9g}")
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return sum(not ok for ok in checks.values())


def cmd_trace(cfg, args):
    from .characteristics import write_trace_csv
    from .verify import run_battery

    tb = cfg.block("trace")
    tr = run_battery(cfg, tb["fields"], tb["characteristics"], tb["t_end"])
    bounds = {"dr_where_K_positive": 1e-8, "denvelope": 1e-8, "log_f_excess": 1e-8,
              "light_cone": 1.0}
    fails = {k: tr.monitor[k] > b for k, b in bounds.items()}
    for k, b in bounds.items():
        print(f"{'FAIL' if fails[k] else 'PASS'} {k} = {tr.monitor[k]:.6g} (bound {b:g})")
    if args.out:
        files = []
        A = cfg.force.A
        for i in range(min(tb["export"], tr.log_f.shape[1] * tr.log_f.shape[2])):
            idx = divmod(i, tr.log_f.shape[2])
            name = f"trace_{idx[0]:03d}_{idx[1]:03d}.csv"
            write_trace_csv(_out_path(args.out, name), tr, A, idx)
            files.append(name)
        summary = {k: float(v) for k, v in tr.monitor.items()}
        summary["failed"] = sorted(k for k, bad in fails.items() if bad)
        _write_json(_out_path(args.out, "manifest.json"), _manifest(cfg, files, summary))
    return sum(fails.values())


def cmd_verify(cfg, args):
    from .verify import verify_all

    rep = verify_all(cfg)
    for line in rep.summary_lines():
        print(line)
    print(f"{len(rep.entries) - len(rep.failures)}/{len(rep.entries)} checks passed")
    if args.out:
        with open(_out_path(args.out, "report.json"), "w") as fh:
            fh.write(rep.to_json())
        _write_json(_out_path(args.out, "manifest.json"), _manifest(
            cfg, ["report.json"], {"n_checks": len(rep.entries), "failed": [e.id for e in rep.failures]}))
    return rep.exit_code


def cmd_kernels(cfg, args):
    from .lightcone import certify_bounds

    kb = cfg.block("kernels")
    rep = certify_bounds(n_samples=kb["samples"], p_max=kb["pmax"], seed=cfg.seed,
                         n_adversarial=kb["adversarial"])
    for name, e in rep.entries.items():
        print(f"{'PASS' if e.ok else 'FAIL'} {name}: max ratio {e.max_ratio:.9g}  ({e.description})")
    ident_ok = rep.identity_max_rel_error <= 1e-12
    print(f"{'PASS' if ident_ok else 'FAIL'} symbol ratio identity: max relative error "
          f"{rep.identity_max_rel_error:.3g}")
    path = args.report or (_out_path(args.out, "kernels_report.json") if args.out else None)
    if path:
        with open(path, "w") as fh:
            fh.write(rep.to_json() + "\n")
    return sum(not e.ok for e in rep.entries.values()) + (not ident_ok)


def cmd_ode(cfg, args):
    from .ode_envelopes import LogSysParams, integrate_WZ, log_double_exp_envelope

    ob = cfg.block("ode")
    prm = LogSysParams(C=ob["C"], W0=ob["W0"], Z0=ob["Z0"], t_end=ob["t"])
    ser = integrate_WZ(prm, ob["dt"])
    log_env = log_double_exp_envelope(prm, ser.t, ob["log_factor"])
    margin = log_env - ser.log_sum
    fh = open(_out_path(args.out, "ode.csv"), "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["t", "W", "Z", "envelope", "log_W", "log_Z", "log_envelope"])
        with np.errstate(over="ignore"):
            env = np.exp(log_env)
        for row in zip(ser.t, ser.W, ser.Z, env, ser.log_W, ser.log_Z, log_env):
            w.writerow([repr(float(v)) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()
    i = int(np.argmin(margin))
    ok = bool(margin[i] >= 0)
    msg = (f"{'PASS' if ok else 'FAIL'} W+Z <= envelope (log factor {ob['log_factor']:g}): "
           f"min log margin {margin[i]:.6g} at t={ser.t[i]:.6g}")
    if ser.overflow_time is not None:
        msg += f"; W or Z exceed the double range from t={ser.overflow_time:.6g} (log-space comparison)"
    print(msg, file=sys.stderr if not args.out else sys.stdout)
    return 0 if ok else 1


COMMANDS = {"simulate": cmd_simulate, "trace": cmd_trace, "verify": cmd_verify,
            "kernels": cmd_kernels, "ode": cmd_ode}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        failures = COMMANDS[args.mode](cfg, args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1
    return min(int(failures), 125)


if __name__ == "__main__":
    sys.exit(main())
