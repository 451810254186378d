"""Characteristic tracing with density transport.

Along a characteristic

    dx/dt = v(p),   dp/dt = F(x, p, t),   d(log f)/dt = -div_p F,

integrated with the classical fourth-order Runge-Kutta method at fixed step.
Log-density is carried instead of the density so that multiplicative growth
over many decades stays additive.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import IntegrationError, ParameterError
from .fields import PlaneWaveSum
from .force import chi_prime, div_p_force, total_force
from .kinematics import norm, velocity


@dataclass
class CharacteristicState:
    """Phase point, carried log-density and time.

    ``x`` and ``p`` have shape ``(..., 3)`` and ``log_f`` the matching
    leading shape, so one state may hold a whole batch of characteristics.
    """

    x: np.ndarray
    p: np.ndarray
    log_f: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.log_f = np.asarray(self.log_f, dtype=float)

    @property
    def r(self):
        return norm(self.p)


def _rates(x, p, t, field, params):
    fs = field(x, t)
    return velocity(p), total_force(fs, p, params), -div_p_force(fs, p, params)


def step(state, field, params, dt):
    """One classical RK4 step of size ``dt``; returns a new state."""
    if not dt > 0:
        raise ParameterError("dt must be positive")
    x, p, lf, t = state.x, state.p, state.log_f, state.t
    h = 0.5 * dt
    k1 = _rates(x, p, t, field, params)
    k2 = _rates(x + h * k1[0], p + h * k1[1], t + h, field, params)
    k3 = _rates(x + h * k2[0], p + h * k2[1], t + h, field, params)
    k4 = _rates(x + dt * k3[0], p + dt * k3[1], t + dt, field, params)
    w = dt / 6.0
    new = CharacteristicState(
        x + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        p + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        lf + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
        t + dt,
    )
    if not (np.all(np.isfinite(new.x)) and np.all(np.isfinite(new.p))
            and np.all(np.isfinite(new.log_f))):
        raise IntegrationError(f"nonfinite characteristic state at t={new.t:.6g}", time=new.t)
    return new


@dataclass
class Trace:
    """Recorded samples of a (batched) characteristic integration.

    ``t`` has shape ``(n,)``; ``x`` and ``p`` shape ``(n, ..., 3)``; ``log_f``
    and ``K`` (field strength at the sample) shape ``(n, ...)``.  ``monitor``
    holds per-step maxima accumulated online over every integration step,
    also the unrecorded ones.
    """

    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    log_f: np.ndarray
    K: np.ndarray
    dt: float
    params: object
    field_description: str = ""
    record_every: int = 1
    monitor: dict = dc_field(default_factory=dict)
    monitor_per_char: dict = dc_field(default_factory=dict)

    @property
    def r(self):
        return norm(self.p)


class StepMonitor:
    """Per-step invariant bookkeeping, reduced over the batch axes.

    Tracks, as running maxima over steps:

    * ``dr``: ``r_{k+1} - r_k`` per characteristic (momentum monotonicity);
    * ``denvelope``: increment of ``A r + 3 log r + log f`` where ``r > 0``;
    * ``light_cone``: ``|x(t) - x(0)| / t``;
    * ``log_f_excess``: ``dlog f - (3M + |chi'(r)|) K dt`` (trapezoid);
    * ``dr_where_K_positive``: same as ``dr`` restricted to ``K > 0`` at both
      ends of the step.

    ``per_char`` keeps the per-characteristic maxima (leading batch shape).
    """

    keys = ("dr", "dr_where_K_positive", "denvelope", "light_cone", "log_f_excess")

    def __init__(self, initial, field, params, A=None):
        self.params = params
        self.A = params.A if A is None else A
        self.x0 = initial.x.copy()
        self.t0 = initial.t
        self.per_char = {k: np.full(initial.log_f.shape, -np.inf) for k in self.keys}
        self._prev = self._snapshot(initial, field)

    def _snapshot(self, state, field):
        r = state.r
        K = field(state.x, state.t).K
        with np.errstate(divide="ignore"):
            env = self.A * r + 3.0 * np.log(r) + state.log_f
        growth = (3.0 * self.params.M + np.abs(chi_prime(r, self.params.R0, self.params.R1))) * K
        return dict(r=r, K=K, env=env, log_f=state.log_f, growth=growth)

    def update(self, state, field, dt):
        cur = self._snapshot(state, field)
        prev, pc = self._prev, self.per_char
        dr = cur["r"] - prev["r"]
        np.maximum(pc["dr"], dr, out=pc["dr"])
        pos = (cur["K"] > 0) & (prev["K"] > 0)
        np.maximum(pc["dr_where_K_positive"], np.where(pos, dr, -np.inf),
                   out=pc["dr_where_K_positive"])
        ok = (cur["r"] > 0) & (prev["r"] > 0)
        with np.errstate(invalid="ignore"):
            denv = np.where(ok, cur["env"] - prev["env"], -np.inf)
        np.maximum(pc["denvelope"], denv, out=pc["denvelope"])
        cone = norm(state.x - self.x0) / (state.t - self.t0)
        np.maximum(pc["light_cone"], cone, out=pc["light_cone"])
        excess = (cur["log_f"] - prev["log_f"]) - 0.5 * dt * (cur["growth"] + prev["growth"])
        np.maximum(pc["log_f_excess"], excess, out=pc["log_f_excess"])
        self._prev = cur

    def summary(self):
        return {k: float(np.max(v)) if v.size else -math.inf for k, v in self.per_char.items()}


def n_steps(t_end, dt):
    return max(1, int(math.ceil(t_end / dt - 1e-9)))


def trace(initial, field, params, t_end, dt, record_every=1, A=None, description="",
          backend="auto"):
    """Integrate ``ceil(t_end/dt)`` RK4 steps from ``initial``.

    Samples are recorded every ``record_every`` steps (the final state is
    always recorded).  ``A`` (default ``params.A``) is the decay rate used by
    the online envelope monitor.

    ``backend="auto"`` runs plane-wave-sum fields through the compiled
    kernel and everything else through numpy; ``"numpy"`` forces the
    generic path.
    """
    if not t_end > 0:
        raise ParameterError("t_end must be positive")
    if dt > t_end:
        raise ParameterError("dt must not exceed t_end")
    if backend not in ("auto", "numpy", "compiled"):
        raise ValueError(f"unknown backend {backend!r}")
    n = n_steps(t_end, dt)
    if backend != "numpy" and isinstance(field, PlaneWaveSum):
        return _trace_compiled(initial, field, params, n, dt, record_every, A, description)
    if backend == "compiled":
        raise ValueError("compiled backend needs a PlaneWaveSum field")
    mon = StepMonitor(initial, field, params, A)
    rec = [(initial, mon._prev["K"])]
    state = initial
    for k in range(1, n + 1):
        state = step(state, field, params, dt)
        mon.update(state, field, dt)
        if k % record_every == 0 or k == n:
            rec.append((state, mon._prev["K"]))
    out = Trace(
        t=np.array([s.t for s, _ in rec]),
        x=np.stack([s.x for s, _ in rec]),
        p=np.stack([s.p for s, _ in rec]),
        log_f=np.stack([s.log_f for s, _ in rec]),
        K=np.stack([K for _, K in rec]),
        dt=dt,
        params=params,
        field_description=description,
        record_every=record_every,
    )
    out.monitor = mon.summary()
    out.monitor_per_char = mon.per_char
    return out


def _trace_compiled(initial, field, params, n, dt, record_every, A, description):
    from ._kernels import N_MONITOR, trace_kernel

    A = params.A if A is None else A
    shape = initial.log_f.shape
    x = np.ascontiguousarray(initial.x.reshape(-1, 3))
    p = np.ascontiguousarray(initial.p.reshape(-1, 3))
    lf = np.ascontiguousarray(initial.log_f.reshape(-1))
    N = lf.size
    if field.batch == 1:
        fidx = np.zeros(N, dtype=np.int64)
    else:
        if shape[0] != field.batch:
            raise ValueError(f"batched field expects leading axis {field.batch}")
        fidx = np.repeat(np.arange(field.batch), N // field.batch)
    nrec = n // record_every + (1 if n % record_every else 0) + 1
    rec_x, rec_p = np.empty((nrec, N, 3)), np.empty((nrec, N, 3))
    rec_lf, rec_K = np.empty((nrec, N)), np.empty((nrec, N))
    monitor = np.empty((N, N_MONITOR))
    bad, t_bad = trace_kernel(
        x, p, lf, float(initial.t), fidx, field.E0, field.B0, field.k, field.omega,
        field.phase, field._ampEB, float(params.M), float(params.R0), float(params.R1),
        float(A), float(dt), int(n), int(record_every), rec_x, rec_p, rec_lf, rec_K, monitor)
    if bad >= 0:
        raise IntegrationError(f"nonfinite characteristic state at t={t_bad:.6g}", time=t_bad)
    steps = np.minimum(np.arange(nrec) * record_every, n)
    out = Trace(
        t=initial.t + steps * dt,
        x=rec_x.reshape((nrec,) + shape + (3,)),
        p=rec_p.reshape((nrec,) + shape + (3,)),
        log_f=rec_lf.reshape((nrec,) + shape),
        K=rec_K.reshape((nrec,) + shape),
        dt=dt, params=params, field_description=description, record_every=record_every,
    )
    out.monitor_per_char = {key: monitor[:, c].reshape(shape)
                            for c, key in enumerate(StepMonitor.keys)}
    out.monitor = {key: float(np.max(v)) if v.size else -math.inf
                   for key, v in out.monitor_per_char.items()}
    return out


def envelope_series(trace, A):
    """``A r + 3 log r + log f`` at every recorded sample.

    This is the logarithm of ``r^3 f e^{A r}``.  It is undefined where the
    momentum vanishes; such samples raise :class:`ParameterError`.
    """
    r = trace.r
    if np.any(r == 0):
        idx = np.argwhere(r == 0)[0]
        raise ParameterError(f"envelope undefined at zero momentum (sample {tuple(idx)})")
    return A * r + 3.0 * np.log(r) + trace.log_f


def monotonicity_violation(series, tol=0.0):
    """Largest step increase of ``series`` along axis 0 beyond ``tol`` (<= 0 when monotone)."""
    series = np.asarray(series)
    if series.shape[0] < 2:
        return -math.inf
    return float(np.max(np.diff(series, axis=0)) - tol)


def log_f_growth_bound(trace):
    """Max over recorded steps of ``dlog f - (3M + |chi'(r)|) K dt``.

    The field-strength integral uses the trapezoid rule on the recorded
    samples; with ``record_every == 1`` this is per integration step.
    """
    prm = trace.params
    growth = (3.0 * prm.M + np.abs(chi_prime(trace.r, prm.R0, prm.R1))) * trace.K
    dt = np.diff(trace.t).reshape((-1,) + (1,) * (trace.log_f.ndim - 1))
    excess = np.diff(trace.log_f, axis=0) - 0.5 * dt * (growth[1:] + growth[:-1])
    return float(np.max(excess))


def light_cone_ratio(trace):
    """Max over samples with ``t > 0`` of ``|x(t) - x(0)| / t``; below one always."""
    disp = norm(trace.x[1:] - trace.x[0])
    t = trace.t[1:].reshape((-1,) + (1,) * (disp.ndim - 1))
    return float(np.max(disp / t))


def write_trace_csv(path, trace, A, index=()):
    """CSV export of one characteristic (``index`` selects it within a batch)."""
    sl = (slice(None),) + tuple(index)
    x, p, lf = trace.x[sl], trace.p[sl], trace.log_f[sl]
    r = norm(p)
    with np.errstate(divide="ignore"):
        env = A * r + 3.0 * np.log(r) + lf
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x1", "x2", "x3", "p1", "p2", "p3", "log_f", "r", "envelope"])
        for k in range(len(trace.t)):
            row = [trace.t[k], *x[k], *p[k], lf[k], r[k], env[k]]
            w.writerow([repr(float(v)) for v in row])
