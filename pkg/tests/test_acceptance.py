"""Acceptance criteria at full scale.

Each test checks one criterion (criterion 11 is split into its three
parts) and records a one-line PASS/FAIL verdict with the measured values.
The lines are printed as the tests run and again in the terminal summary.
"""

import filecmp
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rvm.config import default_config
from rvm.force import condA_residual
from rvm.kinetic import run
from rvm.lightcone import (BumpWave, QuadratureSpec, certify_bounds, manufactured_error,
                           radial_retarded_integral, refinement_orders, retarded_integral)
from rvm.moments import EnvelopeParams, envelope_flux_bound
from rvm.ode_envelopes import (LogSysParams, blowup_ode, envelope_margin, integrate_WZ,
                               lipschitz_constant, sup_envelope)
from rvm.verify import (RETARDED_POINTS, continuity_study, operator_study, run_battery,
                        sign_condition_samples, vacuum_energy_drift)

CFG = default_config()


def verdict(key, ok, detail, capsys=None):
    line = f"criterion {key:>3}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[key] = line
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    return ok


@pytest.fixture(scope="module")
def battery():
    tb = CFG.block("trace")
    t0 = time.perf_counter()
    tr = run_battery(CFG, tb["fields"], tb["characteristics"], tb["t_end"])
    return tr, time.perf_counter() - t0


@pytest.fixture(scope="module")
def full_run():
    t0 = time.perf_counter()
    res = run(CFG)
    return res, time.perf_counter() - t0


def test_criterion_01_momentum_monotonicity(battery, capsys):
    tr, secs = battery
    m = tr.monitor["dr_where_K_positive"]
    ok = m <= 1e-8 and secs <= 30.0
    verdict("1", ok, f"max per-step increase of |p| = {m:.3g} (<= 1e-8), "
            f"100x100 characteristics in {secs:.1f} s (<= 30 s)", capsys)
    assert ok


def test_criterion_02_envelope_decay(battery, capsys):
    tr, secs = battery
    m = tr.monitor["denvelope"]
    ok = m <= 1e-8 and secs <= 30.0
    verdict("2", ok, f"max per-step increase of A r + 3 log r + log f = {m:.3g} (<= 1e-8)", capsys)
    assert ok


def test_criterion_03_envelope_audit(full_run, capsys):
    res, secs = full_run
    ok = res.max_audit <= 1.0 + 1e-6 and secs <= 60.0
    verdict("3", ok, f"max f |p|^3 exp(A|p|) = {res.max_audit:.9g} (<= 1 + 1e-6), "
            f"run in {secs:.1f} s (<= 60 s)", capsys)
    assert ok


def test_criterion_04_rest_particle(full_run, capsys):
    res, _ = full_run
    s = res.series
    dp, dx = float(np.max(s["rest_p"])), float(np.max(s["rest_dx"]))
    ok = dp <= 1e-12 and dx <= 1e-12 and s["time"][-1] >= 10.0
    verdict("4", ok, f"rest tracer max |p| = {dp:.3g}, max |x - x0| = {dx:.3g} "
            f"over t in [0, {s['time'][-1]:g}]", capsys)
    assert ok


def test_criterion_05_flux_bounds(full_run, capsys):
    res, _ = full_run
    ratios = {n: res.max_flux_ratio(n) for n in range(4)}
    b1 = envelope_flux_bound(1, EnvelopeParams())
    ok = all(r <= 1.05 for r in ratios.values()) and abs(b1 - 4 * math.pi / 5) <= 1e-10
    verdict("5", ok, "max vm_n / bound: " + ", ".join(f"n={n} {r:.4f}" for n, r in ratios.items())
            + f" (<= 1.05); bound n=1 = {b1:.10f} vs 4 pi/5", capsys)
    assert ok


def test_criterion_06_sign_condition(capsys):
    t0 = time.perf_counter()
    p, fs = sign_condition_samples(np.random.default_rng(np.random.SeedSequence([0, 1])),
                                   1_000_000, p_max=1e3, K_max=1e3)
    res = float(np.max(condA_residual(fs, p, CFG.force)))
    secs = time.perf_counter() - t0
    ok = res <= 0.0 and secs <= 10.0
    verdict("6", ok, f"max residual = {res:.3g} (<= 0) on 1e6 samples in {secs:.1f} s (<= 10 s)",
            capsys)
    assert ok


def test_criterion_07_kernel_certification(capsys):
    rep = certify_bounds(n_samples=1_000_000, p_max=1e3, seed=0, n_adversarial=10_000)
    six = ("symbineq", "symblow", "secondb", "divsymbb", "sigBb", "tauBb")
    worst = max(rep.entries[k].max_ratio for k in six)
    ok = worst <= 1.0 and rep.identity_max_rel_error <= 1e-12
    verdict("7", ok, f"largest ratio over six bounds = {worst:.9f} (<= 1), identity error "
            f"{rep.identity_max_rel_error:.3g} (<= 1e-12)", capsys)
    assert ok


def test_criterion_08_operator_orders(capsys):
    ident, grad_err, dt_err, _ = operator_study((8, 16, 32))
    orders = {k: float(np.min(refinement_orders(e)))
              for k, e in (("omega.T+V", ident), ("grad", grad_err), ("d_t", dt_err))}
    ok = all(o >= 1.9 for o in orders.values())
    verdict("8", ok, "min observed orders: " + ", ".join(f"{k} {o:.2f}" for k, o in orders.items())
            + " (>= 1.9)", capsys)
    assert ok


def test_criterion_09_retarded_integral(capsys):
    wave = BumpWave((0.3, 0.0, 0.0))
    spec, errs = QuadratureSpec(), []
    for _ in range(3):
        errs.append(manufactured_error(wave, RETARDED_POINTS, spec))
        spec = spec.refined()
    sym = BumpWave()
    gap = abs(retarded_integral(sym.source, (0.0, 0.0, 0.0), 2.0, QuadratureSpec(24, 2, 2, 2))
              - radial_retarded_integral(sym.radial_source, 2.0))
    ok = errs[0] <= 0.05 and errs[1] < errs[0] and errs[2] < errs[1] and gap <= 1e-6
    verdict("9", ok, "relative errors " + ", ".join(f"{e:.3g}" for e in errs)
            + f" (first <= 0.05, decreasing); 3D vs radial {gap:.3g} (<= 1e-6)", capsys)
    assert ok


def test_criterion_10_maxwell_constraints(full_run, capsys):
    res, _ = full_run
    gauss = float(np.max(res.series["gauss_residual"]))
    _, orders = continuity_study()
    drift = vacuum_energy_drift(CFG.grid, 10_000)
    ok = gauss <= 1e-10 and np.min(orders) >= 1.9 and drift <= 1e-8
    verdict("10", ok, f"Gauss residual {gauss:.3g} (<= 1e-10), continuity order "
            f"{np.min(orders):.2f} (>= 1.9), vacuum energy drift {drift:.3g} (<= 1e-8)", capsys)
    assert ok


def test_criterion_11a_double_exponential_envelope(capsys):
    # The envelope exp((1 + log Wbar0) e^{Ct} - 1) is crossed by the extremal
    # trajectory; docs/checks.md explains why and gives the corrected comparison.
    margins = {}
    for C in (0.5, 1.0, 2.0):
        prm = LogSysParams(C=C, t_end=3.0)
        margins[C] = envelope_margin(integrate_WZ(prm, 1e-4), prm, 1.0, "sum")[0]
    ok = all(m >= 0 for m in margins.values())
    verdict("11a", ok, "min log(envelope) - log(W+Z): "
            + ", ".join(f"C={C:g} {m:.6g}" for C, m in margins.items()) + " (>= 0)", capsys)
    assert ok


def test_criterion_11b_blowup_time(capsys):
    errs = {u0: abs(blowup_ode(log_Y0=u0).blowup_time * u0 - 1.0) for u0 in (1.0, 2.0, 4.0)}
    ok = max(errs.values()) <= 0.02
    verdict("11b", ok, "relative blow-up time errors: "
            + ", ".join(f"log Y0={u:g} {e:.2e}" for u, e in errs.items()) + " (<= 0.02)", capsys)
    assert ok


def test_criterion_11c_sup_envelope_lipschitz(capsys):
    rng = np.random.default_rng(np.random.SeedSequence([0, 8]))
    h, worst = 0.01, 0.0
    for _ in range(1000):
        g = np.cumsum(rng.uniform(-1.0, 1.0, 400)) * h * rng.uniform(0.1, 10.0)
        worst = max(worst, lipschitz_constant(sup_envelope(g), h) / lipschitz_constant(g, h))
    ok = worst <= 1.0 + 1e-12
    verdict("11c", ok, f"max Lip(G)/Lip(g) over 1000 paths = {worst:.12g} (<= 1)", capsys)
    assert ok


def test_criterion_12_determinism(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"verify": {"scale": "quick"}, "seed": 4}))
    codes = []
    for name in ("a", "b"):
        proc = subprocess.run([sys.executable, "-m", "rvm.cli", "verify", "--config", str(cfg),
                               "--out", str(tmp_path / name)], capture_output=True, text=True)
        codes.append(proc.returncode)
    same = [filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False)
            for f in ("report.json", "manifest.json")]
    ok = all(same) and codes[0] == codes[1]
    verdict("12", ok, f"report.json identical: {same[0]}, manifest.json identical: {same[1]}",
            capsys)
    assert ok
