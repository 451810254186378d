"""One-shot verification suite.

Every check compares one measured number with a bound and carries an
anchor string naming the inequality or property it exercises; the anchors
are listed with their statements in ``docs/checks.md``.  Suites run in a
thread pool and the report is assembled in check-id order, so the JSON
output depends only on the configuration.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .characteristics import CharacteristicState, trace
from .fields import (FieldState, GridSpec, _cic, _scatter, continuity_residual, discrete_energy,
                     field_battery, maxwell_step, SourceArrays)
from .force import FieldSample, condA_residual, one_minus_chi, total_force
from .kinematics import dot, norm, velocity
from .lightcone import (BumpWave, ConeGrid, QuadratureSpec, apply_T, apply_V, certify_bounds,
                        decompose_derivatives, interior_indices, manufactured_error,
                        radial_retarded_integral, refinement_orders, retarded_integral)
from .moments import EnvelopeParams, envelope_flux_bound, higher_moment_slack
from .ode_envelopes import (LogSysParams, blowup_ode, envelope_margin, integrate_WZ,
                            integrate_Weq, lipschitz_constant, log_double_exp_envelope,
                            sup_envelope)

MAX_EXIT = 125

# problem sizes per scale; "full" is the acceptance size
SCALES = {
    "full": dict(force_samples=1_000_000, battery_fields=None, battery_chars=None,
                 battery_t_end=None, sim=None, kernel_samples=None, kernel_adversarial=None,
                 cone_levels=(8, 16, 32), energy_steps=10_000, ode_dt=None, lipschitz_paths=1000),
    "quick": dict(force_samples=20_000, battery_fields=6, battery_chars=8, battery_t_end=0.5,
                  sim=dict(Nx=16, n_particles=2000, steps=20), kernel_samples=20_000,
                  kernel_adversarial=1000, cone_levels=(8, 16, 32), energy_steps=1000,
                  ode_dt=1e-3, lipschitz_paths=100),
}


@dataclass
class CheckResult:
    """One report entry; ``relation`` is ``"<="`` or ``">="`` between measured and bound."""

    id: str
    anchor: str
    description: str
    measured: float
    bound: float
    tolerance: float
    relation: str = "<="

    @property
    def passed(self):
        if not math.isfinite(self.measured):
            return False
        if self.relation == "<=":
            return self.measured <= self.bound + self.tolerance
        return self.measured >= self.bound - self.tolerance

    def to_dict(self):
        d = asdict(self)
        d["status"] = "pass" if self.passed else "fail"
        for k in ("measured", "bound", "tolerance"):
            d[k] = _json_float(d[k])
        return d


def _json_float(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


@dataclass
class VerificationReport:
    entries: list
    config: dict

    @property
    def failures(self):
        return [e for e in self.entries if not e.passed]

    @property
    def exit_code(self):
        return min(len(self.failures), MAX_EXIT)

    def to_dict(self):
        return {
            "package_version": __version__,
            "seed": self.config["seed"],
            "scale": self.config["verify"]["scale"],
            "n_checks": len(self.entries),
            "n_failed": len(self.failures),
            "failed": [e.id for e in self.failures],
            "checks": [e.to_dict() for e in self.entries],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary_lines(self):
        return [f"{e.id} {'PASS' if e.passed else 'FAIL'} {e.anchor}: measured={e.measured:.6g} "
                f"{e.relation} {e.bound:.6g} (tol {e.tolerance:g})" for e in self.entries]


def _child(seed, index):
    """Independent generator for suite ``index`` derived from the run seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


# ---------------------------------------------------------------------------
# force


def sign_condition_samples(rng, n, p_max=1e3, K_max=1e3):
    """Momenta and field samples for the force inequalities.

    ``|p|`` mixes uniform on ``(0, p_max]``, log-uniform from ``1e-9`` and
    uniform on ``(0, 3]`` (the cutoff region); ``K`` is uniform on
    ``[0, K_max]`` split between ``E`` and ``B`` at a random angle.  A fifth
    of the samples have ``E`` along ``p``, the worst case for the sign
    condition.
    """
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    pick = rng.integers(0, 3, n)
    r = np.select([pick == 0, pick == 1],
                  [rng.uniform(0.0, p_max, n),
                   np.exp(rng.uniform(math.log(1e-9), math.log(p_max), n))],
                  rng.uniform(0.0, 3.0, n))
    r = np.where(r == 0, p_max, r)
    K = rng.uniform(0.0, K_max, n)
    th = rng.uniform(0.0, 0.5 * np.pi, n)
    e = rng.normal(size=(n, 3))
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    b = rng.normal(size=(n, 3))
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    aligned = rng.uniform(size=n) < 0.2
    e[aligned] = d[aligned]
    fs = FieldSample((K * np.cos(th))[:, None] * e, (K * np.sin(th))[:, None] * b)
    return r[:, None] * d, fs


def suite_force(cfg, sc):
    prm = cfg.force
    p, fs = sign_condition_samples(_child(cfg.seed, 1), sc["force_samples"])
    r, K = norm(p), fs.K
    res = condA_residual(fs, p, prm)
    F = total_force(fs, p, prm)
    radial = dot(F, p) / r
    omc = one_minus_chi(r, prm.R0, prm.R1)
    scale = K * (prm.M * r + 1.0) + 1e-300
    rr = np.linspace(prm.R0, prm.R0 + 50.0, 200_001)
    return [
        CheckResult("C01", "sign condition", "max of (3/|p|+A) F.p_hat - div_p F",
                    float(np.max(res)), 0.0, 0.0),
        CheckResult("C02", "radial damping",
                    "max of (F.p_hat + K (M|p| - (1-chi))) / (K (M|p|+1)), rounding-relative",
                    float(np.max((radial + K * (prm.M * r - omc)) / scale)), 0.0, 1e-14),
        CheckResult("C03", "force growth bound", "max |F| / ((M+2)|p| K)",
                    float(np.max(norm(F) / ((prm.M + 2.0) * r * K + 1e-300))), 1.0, 0.0),
        CheckResult("C04", "cutoff bound 1-chi(r) <= 2r", "max of (1-chi(r)) - 2r for r >= R0",
                    float(np.max(one_minus_chi(rr, prm.R0, prm.R1) - 2.0 * rr)), 0.0, 0.0),
    ]


# ---------------------------------------------------------------------------
# characteristics


def battery_initial(rng, n_fields, n_chars, p_min, p_max, box):
    """Positions uniform in ``[-box, box]^3``; ``|p|`` log-uniform, isotropic; ``log f = 0``."""
    x = rng.uniform(-box, box, (n_fields, n_chars, 3))
    d = rng.normal(size=(n_fields, n_chars, 3))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    r = np.exp(rng.uniform(math.log(p_min), math.log(p_max), (n_fields, n_chars, 1)))
    return CharacteristicState(x, r * d, np.zeros((n_fields, n_chars)))


def run_battery(cfg, n_fields, n_chars, t_end, seed_offset=0):
    """Trace the seeded characteristic battery; returns the :class:`Trace`."""
    tb = cfg.block("trace")
    seeds = np.random.SeedSequence([cfg.seed, 2 + seed_offset]).spawn(n_fields + 1)
    field = field_battery(seeds[:n_fields], n_modes=tb["n_modes"])
    init = battery_initial(np.random.default_rng(seeds[-1]), n_fields, n_chars,
                           tb["p_min"], tb["p_max"], tb["box"])
    return trace(init, field, cfg.force, t_end, tb["dt"], record_every=500)


def suite_characteristics(cfg, sc):
    tb = cfg.block("trace")
    nf = sc["battery_fields"] or tb["fields"]
    nc = sc["battery_chars"] or tb["characteristics"]
    t_end = sc["battery_t_end"] or tb["t_end"]
    tr = run_battery(cfg, nf, nc, t_end)
    mon = tr.monitor
    seeds = np.random.SeedSequence([cfg.seed, 3]).spawn(4)
    rest = CharacteristicState(np.random.default_rng(seeds[-1]).uniform(-3, 3, (3, 4, 3)),
                               np.zeros((3, 4, 3)), np.zeros((3, 4)))
    rtr = trace(rest, field_battery(seeds[:3], n_modes=tb["n_modes"]), cfg.force,
                min(t_end, 1.0), tb["dt"], record_every=100)
    return [
        CheckResult("C05", "momentum monotonicity", "max per-step increase of |p| (K > 0)",
                    mon["dr_where_K_positive"], 0.0, 1e-8),
        CheckResult("C06", "Lagrangian envelope decay",
                    "max per-step increase of A|p| + 3 log|p| + log f", mon["denvelope"], 0.0, 1e-8),
        CheckResult("C07", "finite speed of propagation", "max |x(t)-x(0)|/t",
                    mon["light_cone"], 1.0, 0.0),
        CheckResult("C08", "log-density growth", "max of dlog f - (3M+|chi'|) K dt per step",
                    mon["log_f_excess"], 0.0, 1e-8),
        CheckResult("C09", "zero momentum is a fixed point",
                    "max |p(t)| + |x(t)-x(0)| along characteristics started at p = 0",
                    float(np.max(norm(rtr.p)) + np.max(norm(rtr.x - rtr.x[0]))), 0.0, 1e-12),
    ]


# ---------------------------------------------------------------------------
# full simulation


def simulation_config(cfg, sc):
    if sc["sim"] is None:
        return cfg
    s = sc["sim"]
    return cfg.with_overrides(grid={"Nx": s["Nx"]}, distribution={"n_particles": s["n_particles"]},
                              simulation={"steps": s["steps"], "output_every": max(1, s["steps"] // 4)})


def suite_simulation(cfg, sc):
    from .kinetic import run

    scfg = simulation_config(cfg, sc)
    res = run(scfg)
    env = EnvelopeParams(C0=scfg.distribution.C0, A=scfg.force.A)
    ser = res.series
    charge = ser["charge"]
    drift = float(np.max(np.abs(charge - charge[0])) / max(abs(charge[0]), 1e-300))
    closed = 4.0 * math.pi * env.C0 / env.A
    parts, grid = res.state.particles, res.state.grid
    slack = max(higher_moment_slack(parts, grid, n) for n in (1, 2, 3, 4))
    out = [
        CheckResult("C10", "pointwise envelope audit", "max f |p|^3 exp(A|p|) / C0 over run",
                    res.max_audit, 1.0, 1e-6),
        CheckResult("C11", "zero momentum is a fixed point",
                    "max |p| + |x - x0| of the rest tracer during the run",
                    float(np.max(ser["rest_p"]) + np.max(ser["rest_dx"])), 0.0, 1e-12),
        CheckResult("C12", "charge conservation", "relative drift of total charge",
                    drift, 0.0, 1e-12),
        CheckResult("C13", "Gauss law", "max Gauss residual after every step",
                    float(np.max(ser["gauss_residual"])), 0.0, 1e-10),
    ]
    for i, n in enumerate((0, 1, 2, 3)):
        out.append(CheckResult(f"C{14 + i}", f"moment flux bound n={n}",
                               f"sup vm_{n} / bound over cells and output times",
                               res.max_flux_ratio(n), 1.0, 0.05))
    out += [
        CheckResult("C18", "moment flux bound n=1 closed form",
                    "|quadrature bound - 4 pi C0 / A| / (4 pi C0 / A)",
                    abs(envelope_flux_bound(1, env) - closed) / closed, 0.0, 1e-10),
        CheckResult("C19", "higher moments from fluxes",
                    "max m_n - (sqrt2 vm_n + sqrt2^n rho), n = 1..4, final state",
                    slack, 0.0, 1e-9),
        CheckResult("C20", "logarithmic density bound", "max rho / (near + tail bound)",
                    res.max_density_ratio, 1.0, 0.0),
    ]
    return out


# ---------------------------------------------------------------------------
# field solver


def vacuum_energy_drift(grid, steps, amplitude=0.5, mode=1):
    """Relative drift of the conserved discrete energy for a vacuum standing wave."""
    st = FieldState.zeros(grid)
    k = 2 * np.pi * mode / grid.L
    st.Ey[:] = amplitude * np.cos(k * grid.nodes)
    st.Bz[:] = amplitude * np.sin(k * grid.half_nodes)
    z = np.zeros(grid.Nx)
    src = SourceArrays(z, z, z, z)
    e0 = discrete_energy(st, grid)
    worst = 0.0
    for _ in range(steps):
        st = maxwell_step(st, src, grid)
        worst = max(worst, abs(discrete_energy(st, grid) - e0))
    return worst / e0


def continuity_study(levels=(16, 32, 64, 128), L=2 * np.pi, per_cell=64, n_p=32, a=0.5, cfl=0.5):
    """Max continuity residual of one free-streaming step on a quiet-start plasma.

    Particles sit on a regular lattice with Gauss-Legendre momenta
    (Maxwellian weights) and a cosine density modulation; charge is
    deposited before and after a step of ``cfl * dx`` and current at the
    midpoint.  Returns ``(errors, orders)``.
    """
    px, wp = np.polynomial.legendre.leggauss(n_p)
    px = 4.0 * px
    wp = 4.0 * wp * np.exp(-0.5 * px**2) / math.sqrt(2 * np.pi)
    errs = []
    for Nx in levels:
        g = GridSpec(L, Nx, cfl * L / Nx)
        x0 = (np.arange(Nx * per_cell) + 0.5) * g.dx / per_cell
        X, P = np.meshgrid(x0, px, indexing="ij")
        W = (1.0 + a * np.cos(2 * np.pi * X / L)) * wp[None, :] * g.dx / per_cell
        X, P, W = X.ravel(), P.ravel(), W.ravel()
        v = P / np.sqrt(1.0 + P * P)

        def dep(x, w):
            i0, i1, frac = _cic(np.mod(x, L), g)
            return _scatter(i0, i1, frac, w, Nx) / g.dx

        r0, r1 = dep(X, W), dep(X + g.dt * v, W)
        j = dep(X + 0.5 * g.dt * v, W * v)
        errs.append(float(np.max(np.abs(continuity_residual(r0, r1, j, g)))))
    return errs, refinement_orders(errs)


def suite_fields(cfg, sc):
    grid = cfg.grid
    drift = vacuum_energy_drift(grid, sc["energy_steps"])
    _, orders = continuity_study()
    return [
        CheckResult("C21", "vacuum energy conservation",
                    f"relative discrete energy drift over {sc['energy_steps']} steps",
                    drift, 0.0, 1e-8),
        CheckResult("C22", "charge continuity", "min observed order of the continuity residual",
                    float(np.min(orders)), 1.9, 0.0, ">="),
    ]


# ---------------------------------------------------------------------------
# light-cone kernels and operators


def suite_kernels(cfg, sc):
    kb = cfg.block("kernels")
    rep = certify_bounds(n_samples=sc["kernel_samples"] or kb["samples"], p_max=kb["pmax"],
                         seed=cfg.seed, n_adversarial=sc["kernel_adversarial"] or kb["adversarial"])
    out = []
    names = ("symbineq", "symblow", "secondb", "divsymbb", "sigBb", "tauBb", "ET_bound")
    for i, name in enumerate(names):
        e = rep.entries[name]
        out.append(CheckResult(f"C{23 + i}", f"kernel bound {name}", e.description,
                               e.max_ratio, 1.0, 0.0))
    out.append(CheckResult("C30", "symbol ratio identity",
                           "max relative error of the symbol ratio identity",
                           rep.identity_max_rel_error, 0.0, 1e-12))
    return out


def smooth_test_function(y1, y2, y3, s):
    return np.exp(0.3 * s) * np.sin(y1 + 0.5 * y2 - 0.3 * y3 - 0.7 * s) + 0.2 * y1 * y3 * np.cos(s)


def smooth_test_derivatives(y, s):
    y1, y2, y3 = y[:, 0], y[:, 1], y[:, 2]
    a = y1 + 0.5 * y2 - 0.3 * y3 - 0.7 * s
    e = np.exp(0.3 * s)
    grad = np.stack([e * np.cos(a) + 0.2 * y3 * np.cos(s), 0.5 * e * np.cos(a),
                     -0.3 * e * np.cos(a) + 0.2 * y1 * np.cos(s)], axis=-1)
    dt = 0.3 * e * np.sin(a) - 0.7 * e * np.cos(a) - 0.2 * y1 * y3 * np.sin(s)
    return grad, dt


def cone_box(n):
    return ConeGrid((0.5, 0.5, 0.5), (1.5, 1.5, 1.5), 0.5, 1.5, n, (0.0, 0.0, 0.0), 2.0)


STREAM_V = (0.3, -0.2, 0.5)


def operator_study(levels=(8, 16, 32)):
    """Residuals of the cone identity and of the derivative decompositions under refinement."""
    ident, grad_err, dt_err, affine = [], [], [], 0.0
    for n in levels:
        g = cone_box(n)
        U = g.sample(smooth_test_function)
        idx = interior_indices(g, n // 4, n // 4)
        ax = g.axes
        pts = np.stack([ax[k][idx[:, k]] for k in range(4)], axis=-1)
        om = g.omega_at(pts[:, :3])
        T = np.stack([apply_T(i, U, g, idx, "cone") for i in range(3)], axis=-1)
        ident.append(float(np.max(np.abs(np.sum(om * T, axis=-1) + apply_V(U, g, idx, "cone")))))
        G, D = decompose_derivatives(U, g, idx, STREAM_V)
        Ge, De = smooth_test_derivatives(pts[:, :3], pts[:, 3])
        grad_err.append(float(np.max(np.abs(G - Ge))))
        dt_err.append(float(np.max(np.abs(D - De))))
        Ua = g.sample(lambda y1, y2, y3, s: 0.7 - 1.3 * y1 + 0.4 * y2 + 2.1 * y3 - 0.9 * s)
        Ga, Da = decompose_derivatives(Ua, g, idx, STREAM_V)
        affine = max(affine, float(np.max(np.abs(Ga - np.array([-1.3, 0.4, 2.1])))),
                     float(np.max(np.abs(Da + 0.9))))
    return ident, grad_err, dt_err, affine


def suite_operators(cfg, sc):
    ident, grad_err, dt_err, affine = operator_study(sc["cone_levels"])
    return [
        CheckResult("C31", "cone identity omega.T + V = 0",
                    "min observed order of the identity residual",
                    float(np.min(refinement_orders(ident))), 1.9, 0.0, ">="),
        CheckResult("C32", "spatial derivative decomposition",
                    "min observed order of the gradient rebuilt from S and T",
                    float(np.min(refinement_orders(grad_err))), 1.9, 0.0, ">="),
        CheckResult("C33", "time derivative decomposition",
                    "min observed order of d_t rebuilt from S and T",
                    float(np.min(refinement_orders(dt_err))), 1.9, 0.0, ">="),
        CheckResult("C34", "decomposition exact on affine data",
                    "max error of the decompositions for affine u", affine, 0.0, 1e-11),
    ]


RETARDED_POINTS = (((0.0, 0.0, 0.0), 1.5), ((0.5, 0.2, 0.0), 2.0), ((1.2, 0.0, 0.3), 2.5))


def suite_retarded(cfg, sc):
    wave = BumpWave((0.3, 0.0, 0.0), a=1.0, m=4)
    spec = QuadratureSpec()
    errs = []
    for _ in range(3):
        errs.append(manufactured_error(wave, RETARDED_POINTS, spec))
        spec = spec.refined()
    sym = BumpWave((0.0, 0.0, 0.0), a=1.0, m=4)
    t = 2.0
    full = retarded_integral(sym.source, (0.0, 0.0, 0.0), t, QuadratureSpec(24, 2, 2, 2))
    radial = radial_retarded_integral(sym.radial_source, t)
    return [
        CheckResult("C35", "retarded integral", "relative max-norm error at baseline resolution",
                    errs[0], 0.05, 0.0),
        CheckResult("C36", "retarded integral refinement",
                    "largest error ratio between successive refinements",
                    max(errs[k + 1] / errs[k] for k in range(len(errs) - 1)), 1.0, 0.0),
        CheckResult("C37", "retarded integral radial reduction",
                    "|3D quadrature - radial quadrature| for a symmetric source",
                    abs(full - radial), 0.0, 1e-6),
    ]


# ---------------------------------------------------------------------------
# ODE lemmas


WZ_C_VALUES = (0.5, 1.0, 2.0)


def suite_ode(cfg, sc, rng_index=8):
    ob = cfg.block("ode")
    dt = sc["ode_dt"] or ob["dt"]
    k = ob["log_factor"]
    margins, corrected = [], []
    for C in WZ_C_VALUES:
        prm = LogSysParams(C=C, W0=ob["W0"], Z0=ob["Z0"], t_end=ob["t"])
        ser = integrate_WZ(prm, dt)
        margins.append(envelope_margin(ser, prm, k, "sum")[0])
        corrected.append(envelope_margin(ser, prm, 2.0, "wbar")[0])
    prm1 = LogSysParams(C=1.0, t_end=1.0)
    ends = [integrate_WZ(prm1, h, max_hlambda=math.inf).log_W[-1] for h in (0.02, 0.01, 0.005)]
    ratio = abs(ends[0] - ends[1]) / max(abs(ends[1] - ends[2]), 1e-300)
    prmw = LogSysParams(C=ob["C"], W0=ob["W0"], Z0=ob["Z0"], t_end=ob["t"])
    tw, yw = integrate_Weq(prmw, 1e-3, k)
    closed = log_double_exp_envelope(prmw, tw, k)
    weq = float(np.max(np.abs(yw - closed) / np.abs(closed)))
    blow = max(abs(blowup_ode(log_Y0=u0).blowup_time * u0 - 1.0) for u0 in (1.0, 2.0, 4.0))
    rng = _child(cfg.seed, rng_index)
    lip = 0.0
    h = 0.01
    for _ in range(sc["lipschitz_paths"]):
        g = np.cumsum(rng.uniform(-1.0, 1.0, 400)) * h * rng.uniform(0.1, 10.0)
        lip = max(lip, lipschitz_constant(sup_envelope(g), h) / lipschitz_constant(g, h))
    return [
        CheckResult("C38", "double exponential envelope",
                    f"min over C of log envelope(log factor {k:g}) - log(W+Z)",
                    min(margins), 0.0, 0.0, ">="),
        CheckResult("C39", "double exponential envelope, both log terms",
                    "min over C of log envelope(log factor 2) - log(W + Z log Z)",
                    min(corrected), 0.0, 1e-12, ">="),
        CheckResult("C40", "log system fourth order", "step-halving endpoint difference ratio",
                    ratio, 14.0, 0.0, ">="),
        CheckResult("C41", "comparison equation closed form",
                    "max relative error of numeric log Wbar vs the closed form", weq, 0.0, 1e-8),
        CheckResult("C42", "finite-time blow-up", "max |t*(Y0) log Y0 - 1| for Y0 in e, e^2, e^4",
                    blow, 0.0, 0.02),
        CheckResult("C43", "running supremum is Lipschitz",
                    "max Lip(sup envelope of g) / Lip(g) over random paths", lip, 1.0, 1e-12),
    ]


SUITES = (suite_force, suite_characteristics, suite_simulation, suite_fields, suite_kernels,
          suite_operators, suite_retarded, suite_ode)


def verify_all(config, suites=SUITES):
    """Run every suite and return the :class:`VerificationReport`."""
    vb = config.block("verify")
    sc = SCALES[vb["scale"]]
    with ThreadPoolExecutor(max_workers=vb["workers"]) as pool:
        futures = [pool.submit(s, config, sc) for s in suites]
        entries = [e for f in futures for e in f.result()]
    entries.sort(key=lambda e: e.id)
    ids = [e.id for e in entries]
    if len(set(ids)) != len(ids):
        raise RuntimeError("duplicate check ids")
    return VerificationReport(entries, config.to_dict())
